#include "graspprior/cli.hpp"

int main(int argc, char** argv)
{
  return graspprior::run_cli(argc, argv);
}
