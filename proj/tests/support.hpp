#ifndef KVLOGIC_TESTS_SUPPORT_HPP
#define KVLOGIC_TESTS_SUPPORT_HPP

#include <random>
#include <vector>

#include "kvlogic/formula.hpp"
#include "kvlogic/gen.hpp"
#include "kvlogic/semantics.hpp"
#include "kvlogic/tableau.hpp"

namespace kvtest {

inline int pick(std::mt19937_64& rng, int n) {
  return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

inline kvl::Formula sub(std::mt19937_64& rng) {
  return kvl::random_formula(rng, 1 + pick(rng, 5));
}

inline std::string dname(std::mt19937_64& rng) {
  return pick(rng, 2) == 0 ? "d1" : "d2";
}

// Instances of the four axiom schemas over random subformulas.
inline kvl::Formula instance_k(std::mt19937_64& rng) {
  long long i = 1 + pick(rng, 2);
  kvl::Formula a = sub(rng), b = sub(rng);
  return kvl::implies(kvl::box(i, kvl::implies(a, b)),
                      kvl::implies(kvl::box(i, a), kvl::box(i, b)));
}

inline kvl::Formula instance_distnsv(std::mt19937_64& rng) {
  long long i = 1 + pick(rng, 2);
  std::string d = dname(rng);
  kvl::Formula a = sub(rng), b = sub(rng);
  return kvl::implies(kvl::box(i, kvl::implies(a, b)),
                      kvl::implies(kvl::nabla(i, b, d), kvl::nabla(i, a, d)));
}

inline kvl::Formula instance_nsvbot(std::mt19937_64& rng) {
  return kvl::nabla(1 + pick(rng, 2), kvl::bottom(), dname(rng));
}

inline kvl::Formula instance_nsvor(std::mt19937_64& rng) {
  long long i = 1 + pick(rng, 2);
  std::string d = dname(rng);
  kvl::Formula a = sub(rng), b = sub(rng);
  return kvl::implies(
      kvl::conj(kvl::conj(kvl::diamond(i, kvl::conj(a, b)), kvl::nabla(i, a, d)),
                kvl::nabla(i, b, d)),
      kvl::nabla(i, kvl::disj(a, b), d));
}

// Small random pointed model over worlds w0..w2, agents 1..2, props p/q,
// value names d1/d2 with default:0 / default:1 tokens.
inline kvl::Model random_model(std::mt19937_64& rng) {
  kvl::Model m;
  int n = 1 + pick(rng, 3);
  for (int w = 0; w < n; ++w) m.worlds.push_back("w" + std::to_string(w));
  m.root = "w0";
  for (long long agent = 1; agent <= 2; ++agent) {
    auto& pairs = m.relations[agent];
    for (int s = 0; s < n; ++s)
      for (int t = 0; t < n; ++t)
        if (pick(rng, 2)) pairs.emplace_back(m.worlds[s], m.worlds[t]);
  }
  for (int w = 0; w < n; ++w) {
    if (pick(rng, 2)) m.valuation[m.worlds[w]].insert("p");
    if (pick(rng, 2)) m.valuation[m.worlds[w]].insert("q");
    m.values[m.worlds[w]]["d1"] = kvl::ValueToken::def(pick(rng, 2));
    m.values[m.worlds[w]]["d2"] = kvl::ValueToken::def(pick(rng, 2));
  }
  return m;
}

// Random fully expanded, blatantly consistent label set reached by walking
// the expansion rules with random branch choices.
inline kvl::FormulaSet random_fully_expanded(std::mt19937_64& rng, int max_size = 7,
                                             std::size_t max_guard = 3) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    kvl::FormulaSet x{kvl::random_formula(rng, max_size)};
    bool dead = false;
    while (!dead) {
      if (kvl::is_blatantly_inconsistent(x)) {
        dead = true;
        break;
      }
      if (!kvl::is_propositional_tableau(x)) {
        auto kids = kvl::expand_propositional(x);
        x = kids[pick(rng, static_cast<int>(kids.size()))];
        continue;
      }
      if (!kvl::is_fully_expanded(x)) {
        auto kids = kvl::expand_full(x, kvl::subformulas(x));
        x = kids[pick(rng, static_cast<int>(kids.size()))];
        continue;
      }
      break;
    }
    if (dead) continue;
    bool small_guards = true;
    std::map<std::pair<long long, std::string>, std::size_t> counts;
    for (kvl::Formula f : x)
      if (f.kind() == kvl::Kind::Nabla) ++counts[{f.agent(), f.value_name()}];
    for (auto& [key, c] : counts)
      if (c > max_guard) small_guards = false;
    if (small_guards) return x;
  }
  return kvl::FormulaSet{kvl::top()};  // degenerate fallback
}

}  // namespace kvtest

#endif
