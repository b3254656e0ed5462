#include <cstdio>

int main(int, char**) {
  std::puts("nltsa: command-line interface not wired up yet");
  return 1;
}
