#include <string>
#include <vector>

#include "tiode/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tiode::cli::run(args);
}
