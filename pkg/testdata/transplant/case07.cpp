struct Accum {
  int total;
  void add(int v) { total += v; }
  int get() const { return total; }
};

int main() {
  Accum a{};
  a.add(5);
  return a.get() == 5 ? 0 : 1;
}
