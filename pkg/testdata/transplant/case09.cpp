int before() { return 1; }

int after();

int main() {
  return before() + after();
}/*END-MAIN*/

int after() { return -1; }
