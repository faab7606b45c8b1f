// reduce: maximum element of an integer array.
#include <cstdio>
#include <cstdlib>

int maxval(int n, const int* data) {
  int best = data[0];
  #pragma omp parallel for reduction(max : best)
  for (int i = 0; i < n; ++i) {
    if (data[i] > best) {
      best = data[i];
    }
  }
  return best;
}

int main() {
  const int n = 100000;
  int* data = (int*)malloc(n * sizeof(int));
  for (int i = 0; i < n; ++i) {
    data[i] = (int)(((unsigned)i * 2654435761u) % 1000003u); // scatter values
  }
  data[n / 2] = 2000000; /* known maximum */
  int got = maxval(n, data);
  int want = data[0];
  for (int i = 1; i < n; ++i) {
    if (data[i] > want) {
      want = data[i];
    }
  }
  int ok = got == want && got == 2000000;
  printf(ok ? "PASS\n" : "FAIL\n");
  free(data);
  return ok ? 0 : 1;
}
