/* stencil: 3-point smoothing pass over a 1D grid. */
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <cuda_runtime.h>

__global__ void smooth_kernel(int n, const double* in, double* out) {
  int i = blockIdx.x * blockDim.x + threadIdx.x;
  if (i >= 1 && i + 1 < n) {
    out[i] = (in[i - 1] + in[i] + in[i + 1]) / 3.0;
  }
}

int main() {
  const int n = 1 << 14;
  double* in = (double*)malloc(n * sizeof(double));
  double* out = (double*)malloc(n * sizeof(double));
  for (int i = 0; i < n; ++i) {
    in[i] = (i % 11) * 0.25 - 1.0;
  }
  double *din, *dout;
  cudaMalloc(&din, n * sizeof(double));
  cudaMalloc(&dout, n * sizeof(double));
  cudaMemcpy(din, in, n * sizeof(double), cudaMemcpyHostToDevice);
  smooth_kernel<<<(n + 255) / 256, 256>>>(n, din, dout);
  cudaMemcpy(out, dout, n * sizeof(double), cudaMemcpyDeviceToHost);
  out[0] = in[0];
  out[n - 1] = in[n - 1];
  int ok = 1;
  for (int i = 1; i + 1 < n; ++i) {
    double want = (in[i - 1] + in[i] + in[i + 1]) / 3.0;
    if (fabs(out[i] - want) > 1e-12) {
      ok = 0;
    }
  }
  printf(ok ? "PASS\n" : "FAIL\n");
  cudaFree(din);
  cudaFree(dout);
  free(in);
  free(out);
  return ok ? 0 : 1;
}
