int classify(char c) {
  if (c == '{') return 1;
  if (c == '}') return 2;
  return 0;
}

int main() {
  char open = '{';
  return classify(open) == 1 ? 0 : 1;
}
