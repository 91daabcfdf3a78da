#ifndef KVLOGIC_TESTS_STATE_ORACLE_HPP
#define KVLOGIC_TESTS_STATE_ORACLE_HPP

// Independent enumeration of the state-defining constraints, used to check
// StateStream. Works directly off the definition: every (never, cells)
// candidate is drawn from the powerset of the powerset of the guard set and
// filtered, witnesses are filtered cross products. No sharing with the
// production enumerator.

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "kvlogic/formula.hpp"
#include "kvlogic/tableau.hpp"

namespace kvtest {

struct OracleFacts {
  std::map<std::pair<long long, std::string>, std::vector<kvl::Formula>> guards;
  std::vector<std::pair<long long, kvl::Formula>> neg_boxes;
  std::vector<std::tuple<long long, kvl::Formula, std::string>> neg_nablas;
  std::map<long long, std::vector<std::string>> agent_vnames;
};

inline OracleFacts oracle_facts(const kvl::FormulaSet& x) {
  OracleFacts facts;
  for (kvl::Formula f : x) {
    if (f.kind() == kvl::Kind::Nabla)
      facts.guards[{f.agent(), f.value_name()}].push_back(f.child());
    if (f.kind() == kvl::Kind::Not && f.child().kind() == kvl::Kind::Box)
      facts.neg_boxes.emplace_back(f.child().agent(), f.child().child());
    if (f.kind() == kvl::Kind::Not && f.child().kind() == kvl::Kind::Nabla)
      facts.neg_nablas.emplace_back(f.child().agent(), f.child().child(),
                                    f.child().value_name());
  }
  for (auto& [key, list] : facts.guards) facts.agent_vnames[key.first].push_back(key.second);
  return facts;
}

// All (never, cells) pairs satisfying the partition constraints, by
// filtering every subset-of-powerset candidate.
inline std::vector<kvl::StateInfo::Partition> all_partitions(
    const std::vector<kvl::Formula>& guards) {
  std::vector<kvl::StateInfo::Partition> out;
  std::size_t m = guards.size();
  std::size_t powerset = 1ull << m;
  auto as_set = [&](std::size_t mask) {
    kvl::FormulaSet s;
    for (std::size_t j = 0; j < m; ++j)
      if ((mask >> j) & 1ull) s.insert(guards[j]);
    return s;
  };
  for (std::size_t never_mask = 0; never_mask < powerset; ++never_mask) {
    for (std::size_t cells_mask = 0; cells_mask < (1ull << powerset); ++cells_mask) {
      if (!(cells_mask & 1ull)) continue;  // the empty cell must be present
      std::size_t covered = 0;
      bool disjoint = true;
      std::vector<std::size_t> cell_masks;
      for (std::size_t c = 0; c < powerset; ++c) {
        if (!((cells_mask >> c) & 1ull)) continue;
        if (covered & c) disjoint = false;
        covered |= c;
        cell_masks.push_back(c);
      }
      if (!disjoint) continue;
      if (covered & never_mask) continue;
      if ((covered | never_mask) != powerset - 1) continue;
      kvl::StateInfo::Partition part;
      part.never = as_set(never_mask);
      for (std::size_t c : cell_masks) part.cells.push_back(as_set(c));
      std::sort(part.cells.begin(), part.cells.end());
      out.push_back(std::move(part));
    }
  }
  return out;
}

inline std::vector<kvl::StateInfo> brute_force_states(const kvl::FormulaSet& x) {
  OracleFacts facts = oracle_facts(x);

  std::vector<std::pair<long long, std::string>> keys;
  std::vector<std::vector<kvl::StateInfo::Partition>> options;
  for (auto& [key, guards] : facts.guards) {
    keys.push_back(key);
    options.push_back(all_partitions(guards));
  }

  std::vector<kvl::StateInfo> out;
  std::vector<std::size_t> choice(keys.size(), 0);
  while (true) {
    std::map<std::pair<long long, std::string>, kvl::StateInfo::Partition> partitions;
    for (std::size_t k = 0; k < keys.size(); ++k)
      partitions[keys[k]] = options[k][choice[k]];

    // every way of assigning witness cells, filtered by the coupling rule
    std::vector<kvl::StateInfo> states{kvl::StateInfo{}};
    for (auto& s : states) s.partitions = partitions;

    for (auto& [agent, body] : facts.neg_boxes) {
      std::vector<kvl::StateInfo> next;
      for (const auto& st : states) {
        std::vector<std::map<std::string, kvl::FormulaSet>> maps{{}};
        for (const auto& d : facts.agent_vnames[agent]) {
          std::vector<std::map<std::string, kvl::FormulaSet>> grown;
          for (const auto& partial : maps)
            for (const auto& cell : partitions.at({agent, d}).cells) {
              auto copy = partial;
              copy[d] = cell;
              grown.push_back(std::move(copy));
            }
          maps = std::move(grown);
        }
        for (auto& mp : maps) {
          kvl::StateInfo grown_state = st;
          grown_state.box_cells[{agent, body}] = std::move(mp);
          next.push_back(std::move(grown_state));
        }
      }
      states = std::move(next);
    }

    for (auto& key : facts.neg_nablas) {
      const auto& [agent, body, d0] = key;
      std::vector<std::string> domain = facts.agent_vnames.count(agent)
                                            ? facts.agent_vnames[agent]
                                            : std::vector<std::string>{};
      bool d0_in = std::find(domain.begin(), domain.end(), d0) != domain.end();

      std::vector<std::pair<std::map<std::string, kvl::FormulaSet>,
                            std::map<std::string, kvl::FormulaSet>>>
          pairs{{}};
      for (const auto& d : domain) {
        decltype(pairs) grown;
        for (const auto& partial : pairs) {
          const auto& cells = partitions.at({agent, d}).cells;
          for (const auto& ca : cells)
            for (const auto& cb : cells) {
              auto copy = partial;
              copy.first[d] = ca;
              copy.second[d] = cb;
              grown.push_back(std::move(copy));
            }
        }
        pairs = std::move(grown);
      }
      if (!d0_in)
        for (auto& pr : pairs) {
          pr.first[d0] = kvl::FormulaSet{};
          pr.second[d0] = kvl::FormulaSet{};
        }

      std::vector<kvl::StateInfo> next;
      for (const auto& st : states)
        for (const auto& pr : pairs) {
          const kvl::FormulaSet& a0 = pr.first.at(d0);
          const kvl::FormulaSet& b0 = pr.second.at(d0);
          if (a0 == b0 && !a0.empty()) continue;
          kvl::StateInfo grown_state = st;
          grown_state.nabla_cells_a[key] = pr.first;
          grown_state.nabla_cells_b[key] = pr.second;
          next.push_back(std::move(grown_state));
        }
      states = std::move(next);
    }

    out.insert(out.end(), states.begin(), states.end());

    std::size_t k = keys.size();
    while (k > 0) {
      --k;
      if (++choice[k] < options[k].size()) break;
      choice[k] = 0;
      if (k == 0) return out;
    }
    if (keys.empty()) return out;
  }
}

}  // namespace kvtest

#endif
