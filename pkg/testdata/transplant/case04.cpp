#include <cstdio>

int main() {
  printf("}}}{");
  printf("int main() { return 9; }");
  return 0;
}
