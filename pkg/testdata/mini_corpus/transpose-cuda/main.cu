// transpose: out-of-place square matrix transpose.
#include <cstdio>
#include <cstdlib>
#include <cuda_runtime.h>

__global__ void transpose_kernel(int n, const float* in, float* out) {
  int i = blockIdx.y * blockDim.y + threadIdx.y;
  int j = blockIdx.x * blockDim.x + threadIdx.x;
  if (i < n && j < n) {
    out[j * n + i] = in[i * n + j];
  }
}

int main() {
  const int n = 256;
  float* in = (float*)malloc(n * n * sizeof(float));
  float* out = (float*)malloc(n * n * sizeof(float));
  for (int i = 0; i < n * n; ++i) {
    in[i] = (float)((i * 31 + 7) % 1009);
  }
  float *din, *dout;
  cudaMalloc(&din, n * n * sizeof(float));
  cudaMalloc(&dout, n * n * sizeof(float));
  cudaMemcpy(din, in, n * n * sizeof(float), cudaMemcpyHostToDevice);
  dim3 threads(16, 16);
  dim3 grid((n + 15) / 16, (n + 15) / 16);
  transpose_kernel<<<grid, threads>>>(n, din, dout);
  cudaMemcpy(out, dout, n * n * sizeof(float), cudaMemcpyDeviceToHost);
  int ok = 1;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (out[j * n + i] != in[i * n + j]) {
        ok = 0;
      }
    }
  }
  printf(ok ? "PASS\n" : "FAIL\n");
  cudaFree(din);
  cudaFree(dout);
  free(in);
  free(out);
  return ok ? 0 : 1;
}
