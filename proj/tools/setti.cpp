#include <iostream>

int main() {
  std::cout << "setti: pipeline CLI (under construction)\n";
  return 0;
}
