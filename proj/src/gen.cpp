#include "kvlogic/gen.hpp"

#include <string>

namespace kvl {

namespace {

int pick(std::mt19937_64& rng, int n) {
  return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

std::string prop_name(int idx) {
  static const char* names[] = {"p", "q", "r"};
  if (idx < 3) return names[idx];
  return "p" + std::to_string(idx);
}

std::string value_name(int idx) { return "d" + std::to_string(idx + 1); }

Formula gen(std::mt19937_64& rng, int budget, const GenLimits& lim) {
  // shapes: 0 leaf, 1 not, 2 box, 3 nabla, 4 and
  int max_shape = budget >= 3 ? 4 : budget >= 2 ? 3 : 0;
  int shape = pick(rng, max_shape + 1);
  switch (shape) {
    case 1:
      return neg(gen(rng, budget - 1, lim));
    case 2:
      return box(1 + pick(rng, lim.agents), gen(rng, budget - 1, lim));
    case 3:
      return nabla(1 + pick(rng, lim.agents), gen(rng, budget - 1, lim),
                   value_name(pick(rng, lim.values)));
    case 4: {
      int left = 1 + pick(rng, budget - 2);
      return conj(gen(rng, left, lim), gen(rng, budget - 1 - left, lim));
    }
    default: {
      int leaf = pick(rng, lim.props + 1);
      return leaf == 0 ? top() : prop(prop_name(leaf - 1));
    }
  }
}

}  // namespace

Formula random_formula(std::mt19937_64& rng, int max_size, const GenLimits& limits) {
  if (max_size < 1) max_size = 1;
  return gen(rng, max_size, limits);
}

}  // namespace kvl
