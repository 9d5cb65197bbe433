#include <cstdlib>
#include <iostream>

#include "synthetic_cells.hpp"

// make_fixture <root> <per_class> [seed]
int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: make_fixture <root> <per_class> [seed]\n";
    return 1;
  }
  const auto seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 1ULL;
  shallownet::fixtures::write_synthetic_dataset(argv[1], std::strtoull(argv[2], nullptr, 10), seed);
  return 0;
}
