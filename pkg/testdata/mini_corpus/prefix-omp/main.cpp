/* prefix: inclusive scan via per-block partial sums. */
#include <cstdio>
#include <cstdlib>

void inclusive_scan(int n, int block, const long long* in, long long* out) {
  int nblocks = (n + block - 1) / block;
  long long* sums = (long long*)calloc(nblocks, sizeof(long long));
  #pragma omp parallel for
  for (int b = 0; b < nblocks; ++b) {
    long long acc = 0;
    int lo = b * block;
    int hi = lo + block < n ? lo + block : n;
    for (int i = lo; i < hi; ++i) {
      acc += in[i];
      out[i] = acc;
    }
    sums[b] = acc;
  }
  long long offset = 0; // exclusive scan over the block totals
  for (int b = 0; b < nblocks; ++b) {
    long long s = sums[b];
    sums[b] = offset;
    offset += s;
  }
  #pragma omp parallel for
  for (int b = 0; b < nblocks; ++b) {
    int lo = b * block;
    int hi = lo + block < n ? lo + block : n;
    for (int i = lo; i < hi; ++i) {
      out[i] += sums[b];
    }
  }
  free(sums);
}

int main() {
  const int n = 200000;
  long long* in = (long long*)malloc(n * sizeof(long long));
  long long* out = (long long*)malloc(n * sizeof(long long));
  for (int i = 0; i < n; ++i) {
    in[i] = (i % 13) - 6;
  }
  inclusive_scan(n, 1024, in, out);
  long long acc = 0;
  int ok = 1;
  for (int i = 0; i < n; ++i) {
    acc += in[i];
    if (out[i] != acc) {
      ok = 0;
    }
  }
  printf(ok ? "PASS\n" : "FAIL\n");
  free(in);
  free(out);
  return ok ? 0 : 1;
}
