// dot: double-precision dot product via block-level reduction.
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <cuda_runtime.h>

__global__ void dot_kernel(int n, const double* x, const double* y, double* partial) {
  __shared__ double cache[256];
  int tid = blockIdx.x * blockDim.x + threadIdx.x;
  double acc = 0.0;
  for (int i = tid; i < n; i += gridDim.x * blockDim.x) {
    acc += x[i] * y[i];
  }
  cache[threadIdx.x] = acc;
  __syncthreads();
  for (int stride = blockDim.x / 2; stride > 0; stride /= 2) {
    if (threadIdx.x < stride) {
      cache[threadIdx.x] += cache[threadIdx.x + stride];
    }
    __syncthreads();
  }
  if (threadIdx.x == 0) {
    partial[blockIdx.x] = cache[0];
  }
}

int main() {
  const int n = 1 << 15;
  const int blocks = 64;
  double* x = (double*)malloc(n * sizeof(double));
  double* y = (double*)malloc(n * sizeof(double));
  for (int i = 0; i < n; ++i) {
    x[i] = (i % 7) * 0.5;
    y[i] = (i % 3) + 1.0;
  }
  double *dx, *dy, *dp;
  cudaMalloc(&dx, n * sizeof(double));
  cudaMalloc(&dy, n * sizeof(double));
  cudaMalloc(&dp, blocks * sizeof(double));
  cudaMemcpy(dx, x, n * sizeof(double), cudaMemcpyHostToDevice);
  cudaMemcpy(dy, y, n * sizeof(double), cudaMemcpyHostToDevice);
  dot_kernel<<<blocks, 256>>>(n, dx, dy, dp);
  double partial[64];
  cudaMemcpy(partial, dp, blocks * sizeof(double), cudaMemcpyDeviceToHost);
  double got = 0.0;
  for (int b = 0; b < blocks; ++b) {
    got += partial[b];
  }
  double want = 0.0;
  for (int i = 0; i < n; ++i) {
    want += ((i % 7) * 0.5) * ((i % 3) + 1.0);
  }
  int ok = fabs(got - want) <= 1e-6 * fabs(want);
  printf(ok ? "PASS\n" : "FAIL\n");
  cudaFree(dx);
  cudaFree(dy);
  cudaFree(dp);
  free(x);
  free(y);
  return ok ? 0 : 1;
}
