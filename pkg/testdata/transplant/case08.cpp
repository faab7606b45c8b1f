#include <cstdlib>

int main(int argc, char** argv) {
  int total = 0;
  for (int i = 1; i < argc; ++i) {
    if (argv[i][0] == '-') {
      continue;
    }
    total += atoi(argv[i]);
  }
  return total;
}
