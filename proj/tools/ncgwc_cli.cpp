#include "ncgwc/bounds.hpp"

#include <cstdio>

int main() {
  // placeholder entry point; subcommands land with the solver
  std::printf("ncgwc: worst-case analysis toolkit for nonlinear conjugate gradients\n");
  return 0;
}
