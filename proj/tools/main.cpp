#include <iostream>

int main() {
  std::cout << "uqbench placeholder\n";
  return 0;
}
