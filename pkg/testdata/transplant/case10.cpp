static int counter = 0;

int
main(void) {
  counter++;
  return counter == 1 ? 0 : 1;
}
