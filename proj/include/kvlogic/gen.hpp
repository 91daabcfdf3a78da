#ifndef KVLOGIC_GEN_HPP
#define KVLOGIC_GEN_HPP

#include <random>

#include "kvlogic/formula.hpp"

namespace kvl {

// Bounds for random formula generation. The defaults keep fuzz inputs
// inside the brute-force oracle's tractable envelope.
struct GenLimits {
  int agents = 2;
  int props = 3;
  int values = 2;
};

// Uniform over the shapes available at each node-count budget; the result
// has at most max_size nodes. Engine outputs are reduced directly (no
// std::uniform_int_distribution); the stream does not depend on the
// standard library in use.
Formula random_formula(std::mt19937_64& rng, int max_size, const GenLimits& limits = {});

}  // namespace kvl

#endif
