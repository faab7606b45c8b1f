/* file header { not code } */
int main() {
  // closing brace in a comment }
  int x = 1; /* { */
  return x - 1;
}
