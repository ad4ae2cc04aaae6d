#include <string>
#include <vector>

#include "orperc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return orperc::cli::run_command(std::move(args));
}
