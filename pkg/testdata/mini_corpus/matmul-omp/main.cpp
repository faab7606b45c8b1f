// matmul: dense square matrix product C = A * B.
#include <cstdio>
#include <cstdlib>
#include <cmath>

void matmul(int n, const float* a, const float* b, float* c) {
  #pragma omp parallel for collapse(2)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      float acc = 0.0f;
      for (int k = 0; k < n; ++k) {
        acc += a[i * n + k] * b[k * n + j];
      }
      c[i * n + j] = acc;
    }
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
  matmul(n, a, b, c);
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
  free(a);
  free(b);
  free(c);
  return ok ? 0 : 1;
}
