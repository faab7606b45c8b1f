// saxpy: y = a * x + y on the device.
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <cuda_runtime.h>

__global__ void saxpy_kernel(int n, float a, const float* x, float* y) {
  int i = blockIdx.x * blockDim.x + threadIdx.x;
  if (i < n) {
    y[i] = a * x[i] + y[i];
  }
}

int main() {
  const int n = 1 << 16;
  const float a = 2.5f;
  float* x = (float*)malloc(n * sizeof(float));
  float* y = (float*)malloc(n * sizeof(float));
  for (int i = 0; i < n; ++i) {
    x[i] = 0.001f * (float)(i % 1000);
    y[i] = 1.0f;
  }
  float *dx, *dy;
  cudaMalloc(&dx, n * sizeof(float));
  cudaMalloc(&dy, n * sizeof(float));
  cudaMemcpy(dx, x, n * sizeof(float), cudaMemcpyHostToDevice);
  cudaMemcpy(dy, y, n * sizeof(float), cudaMemcpyHostToDevice);
  saxpy_kernel<<<(n + 255) / 256, 256>>>(n, a, dx, dy);
  cudaMemcpy(y, dy, n * sizeof(float), cudaMemcpyDeviceToHost);
  /* verify against the scalar formula */
  int ok = 1;
  for (int i = 0; i < n; ++i) {
    float want = a * (0.001f * (float)(i % 1000)) + 1.0f;
    if (fabsf(y[i] - want) > 1e-5f) {
      ok = 0;
    }
  }
  printf(ok ? "PASS\n" : "FAIL\n");
  cudaFree(dx);
  cudaFree(dy);
  free(x);
  free(y);
  return ok ? 0 : 1;
}
