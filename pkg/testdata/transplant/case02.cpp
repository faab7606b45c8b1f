#include <cstdio>

void kernel(int n, int* a) {
  for (int i = 0; i < n; ++i) {
    a[i] = i;
  }
}

int main() {
  int a[4];
  kernel(4, a);
  printf("%d\n", a[3]);
  return 0;
}
