/* stencil: 3-point smoothing pass over a 1D grid. */
#include <cstdio>
#include <cstdlib>
#include <cmath>

void smooth(int n, const double* in, double* out) {
  #pragma omp parallel for \
      schedule(static)
  for (int i = 1; i < n - 1; ++i) {
    out[i] = (in[i - 1] + in[i] + in[i + 1]) / 3.0;
  }
  out[0] = in[0];
  out[n - 1] = in[n - 1];
}

int main() {
  const int n = 1 << 14;
  double* in = (double*)malloc(n * sizeof(double));
  double* out = (double*)malloc(n * sizeof(double));
  for (int i = 0; i < n; ++i) {
    in[i] = (i % 11) * 0.25 - 1.0;
  }
  smooth(n, in, out);
  int ok = 1;
  for (int i = 1; i + 1 < n; ++i) {
    double want = (in[i - 1] + in[i] + in[i + 1]) / 3.0;
    if (fabs(out[i] - want) > 1e-12) {
      ok = 0;
    }
  }
  if (out[0] != in[0] || out[n - 1] != in[n - 1]) {
    ok = 0;
  }
  printf(ok ? "PASS\n" : "FAIL\n");
  free(in);
  free(out);
  return ok ? 0 : 1;
}
