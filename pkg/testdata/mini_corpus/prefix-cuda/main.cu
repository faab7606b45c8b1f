/* prefix: inclusive scan via per-block partial sums. */
#include <cstdio>
#include <cstdlib>
#include <cuda_runtime.h>

__global__ void block_scan(int n, int block, const long long* in, long long* out,
                           long long* sums) {
  int b = blockIdx.x * blockDim.x + threadIdx.x;
  int nblocks = (n + block - 1) / block;
  if (b < nblocks) {
    long long acc = 0;
    int lo = b * block;
    int hi = lo + block < n ? lo + block : n;
    for (int i = lo; i < hi; ++i) {
      acc += in[i];
      out[i] = acc;
    }
    sums[b] = acc;
  }
}

__global__ void add_offsets(int n, int block, long long* out, const long long* sums) {
  int b = blockIdx.x * blockDim.x + threadIdx.x;
  int nblocks = (n + block - 1) / block;
  if (b < nblocks) {
    int lo = b * block;
    int hi = lo + block < n ? lo + block : n;
    for (int i = lo; i < hi; ++i) {
      out[i] += sums[b];
    }
  }
}

int main() {
  const int n = 200000;
  const int block = 1024;
  int nblocks = (n + block - 1) / block;
  long long* in = (long long*)malloc(n * sizeof(long long));
  long long* out = (long long*)malloc(n * sizeof(long long));
  long long* sums = (long long*)malloc(nblocks * sizeof(long long));
  for (int i = 0; i < n; ++i) {
    in[i] = (i % 13) - 6;
  }
  long long *din, *dout, *dsums;
  cudaMalloc(&din, n * sizeof(long long));
  cudaMalloc(&dout, n * sizeof(long long));
  cudaMalloc(&dsums, nblocks * sizeof(long long));
  cudaMemcpy(din, in, n * sizeof(long long), cudaMemcpyHostToDevice);
  block_scan<<<(nblocks + 127) / 128, 128>>>(n, block, din, dout, dsums);
  cudaMemcpy(sums, dsums, nblocks * sizeof(long long), cudaMemcpyDeviceToHost);
  long long offset = 0; // exclusive scan over the block totals on the host
  for (int b = 0; b < nblocks; ++b) {
    long long s = sums[b];
    sums[b] = offset;
    offset += s;
  }
  cudaMemcpy(dsums, sums, nblocks * sizeof(long long), cudaMemcpyHostToDevice);
  add_offsets<<<(nblocks + 127) / 128, 128>>>(n, block, dout, dsums);
  cudaMemcpy(out, dout, n * sizeof(long long), cudaMemcpyDeviceToHost);
  long long acc = 0;
  int ok = 1;
  for (int i = 0; i < n; ++i) {
    acc += in[i];
    if (out[i] != acc) {
      ok = 0;
    }
  }
  printf(ok ? "PASS\n" : "FAIL\n");
  cudaFree(din);
  cudaFree(dout);
  cudaFree(dsums);
  free(in);
  free(out);
  free(sums);
  return ok ? 0 : 1;
}
