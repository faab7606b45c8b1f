// matmul: dense square matrix product C = A * B, one thread per element.
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <cuda_runtime.h>

__global__ void matmul_kernel(int n, const float* a, const float* b, float* c) {
  int i = blockIdx.y * blockDim.y + threadIdx.y;
  int j = blockIdx.x * blockDim.x + threadIdx.x;
  if (i < n && j < n) {
    float acc = 0.0f;
    for (int k = 0; k < n; ++k) {
      acc += a[i * n + k] * b[k * n + j];
    }
    c[i * n + j] = acc;
  }
}

int main() {
  const int n = 64;
  float* a = (float*)malloc(n * n * sizeof(float));
  float* b = (float*)malloc(n * n * sizeof(float));
  float* c = (float*)malloc(n * n * sizeof(float));
  for (int i = 0; i < n * n; ++i) {
    a[i] = ((i % 5) - 2) * 0.2f;
    b[i] = ((i % 7) - 3) * 0.1f;
  }
  float *da, *db, *dc;
  cudaMalloc(&da, n * n * sizeof(float));
  cudaMalloc(&db, n * n * sizeof(float));
  cudaMalloc(&dc, n * n * sizeof(float));
  cudaMemcpy(da, a, n * n * sizeof(float), cudaMemcpyHostToDevice);
  cudaMemcpy(db, b, n * n * sizeof(float), cudaMemcpyHostToDevice);
  dim3 threads(16, 16);
  dim3 grid((n + 15) / 16, (n + 15) / 16);
  matmul_kernel<<<grid, threads>>>(n, da, db, dc);
  cudaMemcpy(c, dc, n * n * sizeof(float), cudaMemcpyDeviceToHost);
  /* reference in double precision */
  int ok = 1;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double want = 0.0;
      for (int k = 0; k < n; ++k) {
        want += (double)a[i * n + k] * (double)b[k * n + j];
      }
      if (fabs((double)c[i * n + j] - want) > 1e-2) {
        ok = 0;
      }
    }
  }
  printf(ok ? "PASS\n" : "FAIL\n");
  cudaFree(da);
  cudaFree(db);
  cudaFree(dc);
  free(a);
  free(b);
  free(c);
  return ok ? 0 : 1;
}
