/*
 * saxpy: y = a * x + y over a float vector.
 */
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <omp.h>

void saxpy(int n, float a, const float* x, float* y) {
  // one independent update per element
  #pragma omp parallel for
  for (int i = 0; i < n; ++i) {
    y[i] = a * x[i] + y[i]; // fused multiply-add shape
  }
}

int main() {
  const int n = 1 << 16;
  const float a = 2.5f;
  float* x = (float*)malloc(n * sizeof(float));
  float* y = (float*)malloc(n * sizeof(float));
  for (int i = 0; i < n; ++i) {
    x[i] = 0.001f * (float)(i % 1000);
    y[i] = 1.0f; /* uniform start */
  }
  saxpy(n, a, x, y);
  /* verify against the scalar formula */
  int ok = 1;
  for (int i = 0; i < n; ++i) {
    float want = a * (0.001f * (float)(i % 1000)) + 1.0f;
    if (fabsf(y[i] - want) > 1e-5f) {
      ok = 0;
    }
  }
  printf(ok ? "PASS\n" : "FAIL\n");
  free(x);
  free(y);
  return ok ? 0 : 1;
}
