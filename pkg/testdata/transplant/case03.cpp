#include <algorithm>

int helper(int x) { return x * 2; }

int main() {
  auto inc = [](int v) { return v + 1; };
  auto twice = [&](int v) {
    auto inner = [&](int w) { return inc(w) + inc(w); };
    return inner(v);
  };
  return twice(3) == 8 ? 0 : 1;
}
