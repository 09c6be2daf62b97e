#include "vrl/cli.hpp"

int main(int argc, char** argv) {
  return vrl::cli::run(std::vector<std::string>(argv, argv + argc));
}
