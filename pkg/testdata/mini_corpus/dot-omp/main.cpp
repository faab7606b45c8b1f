// dot: double-precision dot product with an OpenMP reduction.
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <omp.h>

double dot(int n, const double* x, const double* y) {
  double sum = 0.0;
  #pragma omp parallel for reduction(+ : sum)
  for (int i = 0; i < n; ++i) {
    sum += x[i] * y[i];
  }
  return sum;
}

int main() {
  const int n = 1 << 15;
  double* x = (double*)malloc(n * sizeof(double));
  double* y = (double*)malloc(n * sizeof(double));
  for (int i = 0; i < n; ++i) {
    x[i] = (i % 7) * 0.5; /* small periodic pattern */
    y[i] = (i % 3) + 1.0;
  }
  double got = dot(n, x, y);
  double want = 0.0;
  for (int i = 0; i < n; ++i) {
    want += ((i % 7) * 0.5) * ((i % 3) + 1.0);
  }
  int ok = fabs(got - want) <= 1e-6 * fabs(want);
  printf(ok ? "PASS\n" : "FAIL\n");
  free(x);
  free(y);
  return ok ? 0 : 1;
}
