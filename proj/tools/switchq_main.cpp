#include "switchq/cli.hpp"

int main(int argc, char** argv) {
  return switchq::run_cli(argc, argv);
}
