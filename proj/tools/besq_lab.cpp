#include <besq/cli.hpp>

int main(int argc, char** argv) {
  return besq::dispatch(std::vector<std::string>(argv + 1, argv + argc));
}
