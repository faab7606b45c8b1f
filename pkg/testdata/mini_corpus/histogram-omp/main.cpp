// histogram: byte-value counts with private bins merged at the end.
#include <cstdio>
#include <cstdlib>
#include <cstring>

void histogram(int n, const unsigned char* data, long long* bins) {
  memset(bins, 0, 256 * sizeof(long long));
  #pragma omp parallel
  {
    long long local[256];
    memset(local, 0, sizeof(local));
    #pragma omp for nowait
    for (int i = 0; i < n; ++i) {
      local[data[i]]++;
    }
    #pragma omp critical
    for (int v = 0; v < 256; ++v) {
      bins[v] += local[v];
    }
  }
}

int main() {
  const int n = 1 << 18;
  unsigned char* data = (unsigned char*)malloc(n);
  for (int i = 0; i < n; ++i) {
    data[i] = (unsigned char)((i * 131 + 17) % 251);
  }
  long long bins[256];
  histogram(n, data, bins);
  long long want[256];
  memset(want, 0, sizeof(want));
  for (int i = 0; i < n; ++i) {
    want[data[i]]++;
  }
  int ok = memcmp(bins, want, sizeof(want)) == 0;
  printf(ok ? "PASS\n" : "FAIL\n");
  free(data);
  return ok ? 0 : 1;
}
