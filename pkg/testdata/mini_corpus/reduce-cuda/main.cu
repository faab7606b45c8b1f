// reduce: maximum element of an integer array via block maxima.
#include <cstdio>
#include <cstdlib>
#include <cuda_runtime.h>

__global__ void max_kernel(int n, const int* data, int* block_max) {
  __shared__ int cache[256];
  int tid = blockIdx.x * blockDim.x + threadIdx.x;
  int best = -2147483648;
  for (int i = tid; i < n; i += gridDim.x * blockDim.x) {
    if (data[i] > best) {
      best = data[i];
    }
  }
  cache[threadIdx.x] = best;
  __syncthreads();
  for (int stride = blockDim.x / 2; stride > 0; stride /= 2) {
    if (threadIdx.x < stride && cache[threadIdx.x + stride] > cache[threadIdx.x]) {
      cache[threadIdx.x] = cache[threadIdx.x + stride];
    }
    __syncthreads();
  }
  if (threadIdx.x == 0) {
    block_max[blockIdx.x] = cache[0];
  }
}

int main() {
  const int n = 100000;
  const int blocks = 64;
  int* data = (int*)malloc(n * sizeof(int));
  for (int i = 0; i < n; ++i) {
    data[i] = (int)(((unsigned)i * 2654435761u) % 1000003u);
  }
  data[n / 2] = 2000000; /* known maximum */
  int *ddata, *dmax;
  cudaMalloc(&ddata, n * sizeof(int));
  cudaMalloc(&dmax, blocks * sizeof(int));
  cudaMemcpy(ddata, data, n * sizeof(int), cudaMemcpyHostToDevice);
  max_kernel<<<blocks, 256>>>(n, ddata, dmax);
  int block_max[64];
  cudaMemcpy(block_max, dmax, blocks * sizeof(int), cudaMemcpyDeviceToHost);
  int got = block_max[0];
  for (int b = 1; b < blocks; ++b) {
    if (block_max[b] > got) {
      got = block_max[b];
    }
  }
  int want = data[0];
  for (int i = 1; i < n; ++i) {
    if (data[i] > want) {
      want = data[i];
    }
  }
  int ok = got == want && got == 2000000;
  printf(ok ? "PASS\n" : "FAIL\n");
  cudaFree(ddata);
  cudaFree(dmax);
  free(data);
  return ok ? 0 : 1;
}
