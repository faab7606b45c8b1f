// matmul utils: printing helpers kept out of the kernel file.
#include <cstdio>

void print_matrix(int n, const float* m) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      printf("%8.3f ", m[i * n + j]);
    }
    printf("\n");
  }
}
