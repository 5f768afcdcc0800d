#include <string>
#include <vector>

#include "potvine/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return potvine::cli::run_cli(std::move(args));
}
