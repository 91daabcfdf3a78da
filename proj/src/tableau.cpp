#include "kvlogic/tableau.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cassert>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <stdexcept>

namespace kvl {

namespace {

bool match_neg_box(Formula f, long long& agent, Formula& body) {
  if (f.kind() != Kind::Not || f.child().kind() != Kind::Box) return false;
  agent = f.child().agent();
  body = f.child().child();
  return true;
}

bool match_neg_nabla(Formula f, long long& agent, Formula& body, std::string& vname) {
  if (f.kind() != Kind::Not || f.child().kind() != Kind::Nabla) return false;
  agent = f.child().agent();
  body = f.child().child();
  vname = f.child().value_name();
  return true;
}

struct LabelFacts {
  // (agent, vname) -> positive Kv guard bodies, canonically sorted
  std::map<std::pair<long long, std::string>, std::vector<Formula>> guards;
  std::vector<std::pair<long long, Formula>> neg_boxes;          // member order
  std::vector<std::tuple<long long, Formula, std::string>> neg_nablas;
  std::map<long long, std::vector<std::string>> agent_vnames;    // sorted

  bool needs_state_info() const {
    return !guards.empty() || !neg_boxes.empty() || !neg_nablas.empty();
  }
  bool has_modal_obligations() const {
    return !neg_boxes.empty() || !neg_nablas.empty();
  }
};

LabelFacts analyze(const FormulaSet& x) {
  LabelFacts facts;
  for (Formula f : x) {
    if (f.kind() == Kind::Nabla) {
      facts.guards[{f.agent(), f.value_name()}].push_back(f.child());
      continue;
    }
    long long agent;
    Formula body = f;
    std::string vname;
    if (match_neg_box(f, agent, body))
      facts.neg_boxes.emplace_back(agent, body);
    else if (match_neg_nabla(f, agent, body, vname))
      facts.neg_nablas.emplace_back(agent, body, vname);
  }
  for (auto& [key, list] : facts.guards) {
    std::sort(list.begin(), list.end());
    facts.agent_vnames[key.first].push_back(key.second);
  }
  return facts;
}

}  // namespace

// ---------------------------------------------------------------------------
// Propositional layer

bool is_blatantly_inconsistent(const FormulaSet& x) {
  for (Formula f : x) {
    if (f.kind() == Kind::Not) {
      if (f.child().kind() == Kind::Top) return true;  // ~T is never satisfiable
      if (x.contains(f.child())) return true;
    }
  }
  return false;
}

namespace {

// Canonically least member violating a decomposition clause, if any.
std::optional<Formula> violating_member(const FormulaSet& x) {
  for (Formula f : x) {
    if (f.kind() == Kind::And) {
      if (!x.contains(f.left()) || !x.contains(f.right())) return f;
    } else if (f.kind() == Kind::Not) {
      Formula inner = f.child();
      if (inner.kind() == Kind::Not && !x.contains(inner.child())) return f;
      if (inner.kind() == Kind::And && !x.contains(neg(inner.left())) &&
          !x.contains(neg(inner.right())))
        return f;
    }
  }
  return std::nullopt;
}

}  // namespace

bool is_propositional_tableau(const FormulaSet& x) {
  return !is_blatantly_inconsistent(x) && !violating_member(x).has_value();
}

bool is_fully_expanded(const FormulaSet& x) {
  for (Formula f : subformulas(x))
    if (!x.contains(f) && !x.contains(neg(f))) return false;
  return true;
}

std::vector<FormulaSet> expand_propositional(const FormulaSet& x) {
  if (is_blatantly_inconsistent(x))
    throw std::logic_error("expand_propositional: set is blatantly inconsistent");
  auto v = violating_member(x);
  if (!v) throw std::logic_error("expand_propositional: already a propositional tableau");
  Formula f = *v;
  if (f.kind() == Kind::And) {
    FormulaSet out = x;
    out.insert(f.left());
    out.insert(f.right());
    return {out};
  }
  Formula inner = f.child();
  if (inner.kind() == Kind::Not) return {x.with(inner.child())};
  return {x.with(neg(inner.left())), x.with(neg(inner.right()))};
}

std::vector<FormulaSet> expand_full(const FormulaSet& x, const FormulaSet& closure) {
  for (Formula f : closure)
    if (!x.contains(f) && !x.contains(neg(f))) return {x.with(f), x.with(neg(f))};
  throw std::logic_error("expand_full: already fully expanded");
}

// ---------------------------------------------------------------------------
// State enumeration

namespace {

// Lexicographically next restricted growth string; false when exhausted.
bool next_growth(std::vector<int>& s) {
  for (int i = static_cast<int>(s.size()) - 1; i >= 1; --i) {
    int mx = *std::max_element(s.begin(), s.begin() + i);
    if (s[i] <= mx) {
      ++s[i];
      std::fill(s.begin() + i + 1, s.end(), 0);
      return true;
    }
  }
  return false;
}

// Valid witness-cell index pairs for a coupled value name: the two sides
// must pick different cells unless both pick the empty cell (index 0).
int joint_pair_count(int cells) { return cells * cells - (cells - 1); }

std::pair<int, int> decode_joint_pair(int cells, int index) {
  int k = 0;
  for (int u = 0; u < cells; ++u)
    for (int v = 0; v < cells; ++v) {
      if (u == v && u != 0) continue;
      if (k == index) return {u, v};
      ++k;
    }
  throw std::logic_error("joint pair index out of range");
}

}  // namespace

void StateStream::GuardKey::rebuild() {
  current = StateInfo::Partition{};
  std::vector<Formula> rest;
  for (std::size_t j = 0; j < guards.size(); ++j) {
    if ((never_mask >> j) & 1ull)
      current.never.insert(guards[j]);
    else
      rest.push_back(guards[j]);
  }
  assert(growth.size() == rest.size());
  std::vector<FormulaSet> blocks;
  for (std::size_t j = 0; j < rest.size(); ++j) {
    std::size_t b = static_cast<std::size_t>(growth[j]);
    if (b >= blocks.size()) blocks.resize(b + 1);
    blocks[b].insert(rest[j]);
  }
  current.cells.push_back(FormulaSet{});  // the fresh-value cell
  for (auto& blk : blocks) current.cells.push_back(std::move(blk));
  std::sort(current.cells.begin(), current.cells.end());
}

bool StateStream::GuardKey::advance() {
  if (next_growth(growth)) {
    rebuild();
    return true;
  }
  ++never_mask;
  bool wrapped = never_mask == (1ull << guards.size());
  if (wrapped) never_mask = 0;
  growth.assign(guards.size() - std::popcount(never_mask), 0);
  rebuild();
  return !wrapped;
}

StateStream::StateStream(const FormulaSet& label) : label_(label) {
  LabelFacts facts = analyze(label);
  for (auto& [key, glist] : facts.guards) {
    if (glist.size() >= 62)
      throw std::invalid_argument("guard set too large to enumerate");
    GuardKey gk;
    gk.agent = key.first;
    gk.vname = key.second;
    gk.guards = glist;
    gk.growth.assign(glist.size(), 0);
    gk.rebuild();
    keys_.push_back(std::move(gk));
  }
  neg_boxes_ = std::move(facts.neg_boxes);
  neg_nablas_ = std::move(facts.neg_nablas);
  agent_vnames_ = std::move(facts.agent_vnames);
}

const std::vector<FormulaSet>& StateStream::cells_for(long long agent,
                                                      const std::string& vname) const {
  for (const auto& gk : keys_)
    if (gk.agent == agent && gk.vname == vname) return gk.current.cells;
  throw std::logic_error("no partition for value name " + vname);
}

void StateStream::reset_digits() {
  digits_.clear();
  for (const auto& [agent, body] : neg_boxes_) {
    (void)body;
    auto it = agent_vnames_.find(agent);
    if (it == agent_vnames_.end()) continue;
    for (const auto& d : it->second)
      digits_.push_back({static_cast<int>(cells_for(agent, d).size()), 0});
  }
  for (const auto& [agent, body, d0] : neg_nablas_) {
    (void)body;
    auto it = agent_vnames_.find(agent);
    if (it == agent_vnames_.end()) continue;
    for (const auto& d : it->second) {
      int cells = static_cast<int>(cells_for(agent, d).size());
      if (d == d0)
        digits_.push_back({joint_pair_count(cells), 0});
      else {
        digits_.push_back({cells, 0});  // first witness
        digits_.push_back({cells, 0});  // second witness
      }
    }
  }
}

StateInfo StateStream::materialize() const {
  StateInfo out;
  for (const auto& gk : keys_) out.partitions[{gk.agent, gk.vname}] = gk.current;

  std::size_t di = 0;
  for (const auto& [agent, body] : neg_boxes_) {
    auto& cell_map = out.box_cells[{agent, body}];
    auto it = agent_vnames_.find(agent);
    if (it == agent_vnames_.end()) continue;
    for (const auto& d : it->second)
      cell_map[d] = cells_for(agent, d)[digits_[di++].value];
  }
  for (const auto& [agent, body, d0] : neg_nablas_) {
    auto& map_a = out.nabla_cells_a[{agent, body, d0}];
    auto& map_b = out.nabla_cells_b[{agent, body, d0}];
    bool d0_constrained = false;
    auto it = agent_vnames_.find(agent);
    if (it != agent_vnames_.end()) {
      for (const auto& d : it->second) {
        const auto& cells = cells_for(agent, d);
        if (d == d0) {
          auto [u, v] = decode_joint_pair(static_cast<int>(cells.size()),
                                          digits_[di++].value);
          map_a[d] = cells[u];
          map_b[d] = cells[v];
          d0_constrained = true;
        } else {
          map_a[d] = cells[digits_[di].value];
          map_b[d] = cells[digits_[di + 1].value];
          di += 2;
        }
      }
    }
    if (!d0_constrained) {
      map_a[d0] = FormulaSet{};
      map_b[d0] = FormulaSet{};
    }
  }
  assert(di == digits_.size());
  return out;
}

std::optional<StateInfo> StateStream::next() {
  if (done_) return std::nullopt;
  if (!started_) {
    started_ = true;
    reset_digits();
    return materialize();
  }
  for (int i = static_cast<int>(digits_.size()) - 1; i >= 0; --i) {
    if (++digits_[i].value < digits_[i].limit) return materialize();
    digits_[i].value = 0;
  }
  for (int i = static_cast<int>(keys_.size()) - 1; i >= 0; --i) {
    if (keys_[i].advance()) {
      reset_digits();
      return materialize();
    }
    // wrapped back to its first choice; carry on to the previous key
  }
  done_ = true;
  return std::nullopt;
}

std::string StateInfo::str() const {
  std::ostringstream os;
  os << "g{";
  bool first = true;
  for (const auto& [key, part] : partitions) {
    if (!first) os << " | ";
    first = false;
    os << "(" << key.first << "," << key.second << "):never=" << part.never.str()
       << ";cells=[";
    for (std::size_t i = 0; i < part.cells.size(); ++i) {
      if (i) os << ",";
      os << part.cells[i].str();
    }
    os << "]";
  }
  os << "} h{";
  first = true;
  for (const auto& [key, cell_map] : box_cells) {
    if (!first) os << " | ";
    first = false;
    os << "(" << key.first << "," << key.second.str() << "):";
    for (const auto& [d, cell] : cell_map) os << d << "->" << cell.str();
  }
  os << "}";
  auto dump_witness = [&os](const char* tag, const auto& m) {
    os << " " << tag << "{";
    bool fst = true;
    for (const auto& [key, cell_map] : m) {
      if (!fst) os << " | ";
      fst = false;
      os << "(" << std::get<0>(key) << "," << std::get<1>(key).str() << ","
         << std::get<2>(key) << "):";
      for (const auto& [d, cell] : cell_map) os << d << "->" << cell.str();
    }
    os << "}";
  };
  dump_witness("ha", nabla_cells_a);
  dump_witness("hb", nabla_cells_b);
  return os.str();
}

// ---------------------------------------------------------------------------
// Labeled successors

namespace {

FormulaSet cell_union(const StateInfo::Partition& part) {
  FormulaSet out;
  for (const auto& cell : part.cells) out.insert_all(cell);
  return out;
}

void check_is_state(const StateInfo& s, const LabelFacts& facts) {
  auto bad = [](const std::string& why) {
    throw std::logic_error("not a state: " + why);
  };
  if (s.partitions.size() != facts.guards.size()) bad("partition keys mismatch");
  for (const auto& [key, glist] : facts.guards) {
    auto it = s.partitions.find(key);
    if (it == s.partitions.end()) bad("missing partition for a guarded value name");
    const auto& part = it->second;
    FormulaSet everything = part.never;
    std::size_t total = part.never.size();
    if (part.cells.empty() || !part.cells.front().empty())
      bad("cells must start with the empty cell");
    for (std::size_t i = 0; i < part.cells.size(); ++i) {
      if (i > 0 && part.cells[i].empty()) bad("duplicate empty cell");
      everything.insert_all(part.cells[i]);
      total += part.cells[i].size();
    }
    FormulaSet guard_set;
    for (Formula g : glist) guard_set.insert(g);
    if (!(everything == guard_set)) bad("partition does not cover the guard set");
    if (total != guard_set.size()) bad("partition members overlap");
  }
  if (s.box_cells.size() != facts.neg_boxes.size()) bad("box witness keys mismatch");
  for (const auto& [agent, body] : facts.neg_boxes) {
    auto it = s.box_cells.find({agent, body});
    if (it == s.box_cells.end()) bad("missing box witness");
    auto vn = facts.agent_vnames.find(agent);
    std::size_t expected = vn == facts.agent_vnames.end() ? 0 : vn->second.size();
    if (it->second.size() != expected) bad("box witness domain mismatch");
    for (const auto& [d, cell] : it->second) {
      const auto& part = s.partitions.at({agent, d});
      if (std::find(part.cells.begin(), part.cells.end(), cell) == part.cells.end())
        bad("box witness cell not in partition");
    }
  }
  if (s.nabla_cells_a.size() != facts.neg_nablas.size() ||
      s.nabla_cells_b.size() != facts.neg_nablas.size())
    bad("nabla witness keys mismatch");
  for (const auto& key : facts.neg_nablas) {
    auto ia = s.nabla_cells_a.find(key);
    auto ib = s.nabla_cells_b.find(key);
    if (ia == s.nabla_cells_a.end() || ib == s.nabla_cells_b.end())
      bad("missing nabla witness");
    const auto& [agent, body, d0] = key;
    (void)body;
    auto vn = facts.agent_vnames.find(agent);
    std::vector<std::string> domain =
        vn == facts.agent_vnames.end() ? std::vector<std::string>{} : vn->second;
    bool d0_in = std::find(domain.begin(), domain.end(), d0) != domain.end();
    if (!d0_in) domain.push_back(d0);
    if (ia->second.size() != domain.size() || ib->second.size() != domain.size())
      bad("nabla witness domain mismatch");
    for (const auto& d : domain) {
      auto ca = ia->second.find(d);
      auto cb = ib->second.find(d);
      if (ca == ia->second.end() || cb == ib->second.end())
        bad("nabla witness missing value name");
      if (d0_in || d != d0) {
        const auto& part = s.partitions.at({agent, d});
        if (std::find(part.cells.begin(), part.cells.end(), ca->second) ==
                part.cells.end() ||
            std::find(part.cells.begin(), part.cells.end(), cb->second) ==
                part.cells.end())
          bad("nabla witness cell not in partition");
      } else if (!ca->second.empty() || !cb->second.empty()) {
        bad("unguarded value name must map to the empty cell");
      }
    }
    const FormulaSet& a0 = ia->second.at(d0);
    const FormulaSet& b0 = ib->second.at(d0);
    if (a0 == b0 && !a0.empty()) bad("nabla witnesses agree on a nonempty cell");
  }
}

FormulaSet successor_base(const FormulaSet& x, const StateInfo& s, long long agent,
                          const std::map<std::string, FormulaSet>& chosen,
                          const LabelFacts& facts) {
  FormulaSet label = unbox(x, agent);
  auto vn = facts.agent_vnames.find(agent);
  if (vn != facts.agent_vnames.end()) {
    for (const auto& d : vn->second) {
      const auto& part = s.partitions.at({agent, d});
      FormulaSet refuted = part.never;
      const FormulaSet& cell = chosen.at(d);
      for (Formula g : cell_union(part))
        if (!cell.contains(g)) refuted.insert(g);
      label.insert_all(negate_all(refuted));
    }
  }
  return label;
}

template <typename Fn>
void for_each_labeled(const FormulaSet& x, const StateInfo& s, Fn&& fn) {
  LabelFacts facts = analyze(x);
  check_is_state(s, facts);
  for (Formula f : x) {
    long long agent;
    Formula body = f;
    std::string vname;
    if (match_neg_box(f, agent, body)) {
      const auto& chosen = s.box_cells.at({agent, body});
      LabeledSuccessor ls;
      ls.agent = agent;
      ls.label = successor_base(x, s, agent, chosen, facts);
      ls.label.insert(neg(body));
      for (const auto& [d, cell] : chosen)
        ls.constraints.emplace(d, ValueToken::cell(cell));
      if (!fn(std::move(ls))) return;
    } else if (match_neg_nabla(f, agent, body, vname)) {
      const auto& chosen_a = s.nabla_cells_a.at({agent, body, vname});
      const auto& chosen_b = s.nabla_cells_b.at({agent, body, vname});
      bool fresh_pair = chosen_a.at(vname) == chosen_b.at(vname);
      for (int side = 0; side < 2; ++side) {
        const auto& chosen = side == 0 ? chosen_a : chosen_b;
        LabeledSuccessor ls;
        ls.agent = agent;
        ls.label = successor_base(x, s, agent, chosen, facts);
        ls.label.insert(body);
        for (const auto& [d, cell] : chosen)
          ls.constraints.emplace(d, ValueToken::cell(cell));
        if (fresh_pair) {
          // both sides chose the empty cell: hand out the two reserved values
          ls.constraints.insert_or_assign(
              vname, side == 0 ? ValueToken::bullet() : ValueToken::circ());
        }
        if (!fn(std::move(ls))) return;
      }
    }
  }
}

}  // namespace

std::vector<LabeledSuccessor> labeled_successors(const FormulaSet& x, const StateInfo& s) {
  std::vector<LabeledSuccessor> out;
  for_each_labeled(x, s, [&](LabeledSuccessor&& ls) {
    out.push_back(std::move(ls));
    return true;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Decision procedure. Two engines implement the same tree walk: a reference
// engine over FormulaSet labels, and an indexed engine over bitmask labels
// ranked inside sub_plus(root) — every label set the rules produce stays in
// that closure, so ranks cover everything and rank order coincides with the
// canonical formula order. The indexed engine is used whenever the closure
// fits; the reference engine doubles as a cross-check and as the fallback.

namespace {

enum class Rule { LeafSat, LeafUnsat, Decompose, Complete, FormStates, Modal };

const char* rule_name(Rule r) {
  switch (r) {
    case Rule::LeafSat:
      return "leaf";
    case Rule::LeafUnsat:
      return "clash";
    case Rule::Decompose:
      return "decompose";
    case Rule::Complete:
      return "complete";
    case Rule::FormStates:
      return "states";
    case Rule::Modal:
      return "modal";
  }
  return "?";
}

Rule classify(const FormulaSet& x, bool has_info) {
  if (is_blatantly_inconsistent(x)) return Rule::LeafUnsat;
  if (violating_member(x)) return Rule::Decompose;
  if (!is_fully_expanded(x)) return Rule::Complete;
  bool has_guard = false, has_obligation = false;
  for (Formula f : x) {
    if (f.kind() == Kind::Nabla) has_guard = true;
    if (f.kind() == Kind::Not &&
        (f.child().kind() == Kind::Box || f.child().kind() == Kind::Nabla))
      has_obligation = true;
  }
  if (!has_info) return (has_guard || has_obligation) ? Rule::FormStates : Rule::LeafSat;
  return has_obligation ? Rule::Modal : Rule::LeafSat;
}

std::optional<LabeledSuccessor> labeled_successor_at(const FormulaSet& x,
                                                     const StateInfo& s,
                                                     std::size_t index) {
  std::optional<LabeledSuccessor> out;
  std::size_t k = 0;
  for_each_labeled(x, s, [&](LabeledSuccessor&& ls) {
    if (k++ == index) {
      out = std::move(ls);
      return false;
    }
    return true;
  });
  return out;
}

struct SetFrame {
  FormulaSet label;
  std::optional<StateInfo> info;
  Rule rule = Rule::LeafSat;
  int depth = 0;
  int chain = 1;  // nodes on the unlabeled run ending here
  bool visited = false;
  bool agg = false;
  std::size_t next_child = 0;
  std::optional<StateStream> stream;
};

bool run_dfs_sets(const FormulaSet& root_label, std::optional<StateInfo> root_info,
                  TableauStats& st, const TraceSink& trace) {
  std::vector<SetFrame> stack;
  {
    SetFrame root;
    root.label = root_label;
    root.info = std::move(root_info);
    stack.push_back(std::move(root));
  }
  std::optional<bool> result;

  while (!stack.empty()) {
    SetFrame& fr = stack.back();

    if (!fr.visited) {
      fr.visited = true;
      fr.rule = classify(fr.label, fr.info.has_value());
      ++st.nodes_visited;
      st.max_depth = std::max(st.max_depth, fr.depth);
      st.max_unlabeled_chain = std::max(st.max_unlabeled_chain, fr.chain);
      if (trace)
        trace(std::string(rule_name(fr.rule)) + " size=" +
              std::to_string(fr.label.size()) + " depth=" + std::to_string(fr.depth));
      if (fr.rule == Rule::LeafSat || fr.rule == Rule::LeafUnsat) {
        result = fr.rule == Rule::LeafSat;
        stack.pop_back();
        continue;
      }
      fr.agg = fr.rule == Rule::Modal;  // conjunctive start; others disjunctive
    } else if (result.has_value()) {
      bool r = result.value_or(false);
      result.reset();
      if (fr.rule == Rule::Modal) {
        if (!r) {  // one failing labeled successor sinks the state
          result = false;
          stack.pop_back();
          continue;
        }
      } else if (r) {  // one satisfiable child settles a disjunctive node
        result = true;
        stack.pop_back();
        continue;
      }
    }

    SetFrame child;
    bool have_child = false;
    switch (fr.rule) {
      case Rule::Decompose: {
        auto kids = expand_propositional(fr.label);
        if (fr.next_child < kids.size()) {
          child.label = std::move(kids[fr.next_child++]);
          child.chain = fr.chain + 1;
          have_child = true;
        }
        break;
      }
      case Rule::Complete: {
        auto kids = expand_full(fr.label, subformulas(fr.label));
        if (fr.next_child < kids.size()) {
          child.label = std::move(kids[fr.next_child++]);
          child.chain = fr.chain + 1;
          have_child = true;
        }
        break;
      }
      case Rule::FormStates: {
        if (!fr.stream) fr.stream.emplace(fr.label);
        if (auto s = fr.stream->next()) {
          ++st.states_enumerated;
          child.label = fr.label;
          child.info = std::move(*s);
          child.chain = fr.chain + 1;
          have_child = true;
        }
        break;
      }
      case Rule::Modal: {
        if (auto ls = labeled_successor_at(fr.label, *fr.info, fr.next_child)) {
          ++fr.next_child;
          child.label = std::move(ls->label);
          child.chain = 1;
          have_child = true;
        }
        break;
      }
      default:
        break;
    }

    if (have_child) {
      child.depth = fr.depth + 1;
      stack.push_back(std::move(child));
    } else {
      result = fr.agg;
      stack.pop_back();
    }
  }
  assert(result.has_value());
  return result.value_or(false);
}

// ---------------------------------------------------------------------------
// Indexed engine

constexpr int kMaskWords = 8;
constexpr int kMaxRanked = kMaskWords * 64;

struct Mask {
  std::array<std::uint64_t, kMaskWords> w{};

  void set(int i) { w[i >> 6] |= 1ull << (i & 63); }
  bool test(int i) const { return (w[i >> 6] >> (i & 63)) & 1ull; }
  void operator|=(const Mask& o) {
    for (int i = 0; i < kMaskWords; ++i) w[i] |= o.w[i];
  }
  bool operator==(const Mask&) const = default;

  template <typename Fn>
  void for_each(Fn&& fn) const {  // ascending, i.e. canonical order
    for (int wi = 0; wi < kMaskWords; ++wi) {
      std::uint64_t v = w[wi];
      while (v) {
        fn(wi * 64 + std::countr_zero(v));
        v &= v - 1;
      }
    }
  }
};

// The ranked closure of the root formula plus per-rank structure lookups.
struct Ranked {
  std::vector<Formula> fs;  // canonical order; index is the rank
  std::unordered_map<const void*, int> rank_of;
  std::vector<Kind> kinds;
  std::vector<int> child, left, right, negr;
  std::vector<long long> agent;
  std::vector<int> vid;  // Nabla value name id, else -1
  std::vector<std::string> vnames;
  std::vector<Mask> submask;
  int bot = -1;

  explicit Ranked(Formula root) {
    FormulaSet closure = sub_plus(root);
    fs.assign(closure.begin(), closure.end());
    std::size_t n = fs.size();
    for (std::size_t i = 0; i < n; ++i) rank_of[fs[i].raw()] = static_cast<int>(i);
    kinds.resize(n);
    child.assign(n, -1);
    left.assign(n, -1);
    right.assign(n, -1);
    negr.assign(n, -1);
    agent.assign(n, 0);
    vid.assign(n, -1);
    submask.resize(n);

    std::set<std::string> names;
    for (Formula f : fs)
      if (f.kind() == Kind::Nabla) names.insert(f.value_name());
    vnames.assign(names.begin(), names.end());

    for (std::size_t i = 0; i < n; ++i) {
      Formula f = fs[i];
      kinds[i] = f.kind();
      switch (f.kind()) {
        case Kind::Top:
          break;
        case Kind::Prop:
          break;
        case Kind::Not:
        case Kind::Box:
          child[i] = rank(f.child());
          break;
        case Kind::Nabla: {
          child[i] = rank(f.child());
          auto it = std::lower_bound(vnames.begin(), vnames.end(), f.value_name());
          vid[i] = static_cast<int>(it - vnames.begin());
          break;
        }
        case Kind::And:
          left[i] = rank(f.left());
          right[i] = rank(f.right());
          break;
      }
      if (f.kind() == Kind::Box || f.kind() == Kind::Nabla) agent[i] = f.agent();
      negr[i] = rank(neg(f));
      for (Formula s : subformulas(f)) {
        int r = rank(s);
        assert(r >= 0);
        submask[i].set(r);
      }
    }
    bot = rank(neg(top()));
  }

  int rank(Formula f) const {
    auto it = rank_of.find(f.raw());
    return it == rank_of.end() ? -1 : it->second;
  }

  Mask to_mask(const FormulaSet& x) const {
    Mask m;
    for (Formula f : x) {
      int r = rank(f);
      assert(r >= 0);
      m.set(r);
    }
    return m;
  }
};

bool blatant_idx(const Ranked& u, const Mask& x) {
  if (u.bot >= 0 && x.test(u.bot)) return true;
  bool found = false;
  x.for_each([&](int r) {
    if (u.kinds[r] == Kind::Not && x.test(u.child[r])) found = true;
  });
  return found;
}

int violating_idx(const Ranked& u, const Mask& x) {
  int hit = -1;
  x.for_each([&](int r) {
    if (hit >= 0) return;
    switch (u.kinds[r]) {
      case Kind::And:
        if (!x.test(u.left[r]) || !x.test(u.right[r])) hit = r;
        break;
      case Kind::Not: {
        int c = u.child[r];
        if (u.kinds[c] == Kind::Not && !x.test(u.child[c])) hit = r;
        if (u.kinds[c] == Kind::And && !x.test(u.negr[u.left[c]]) &&
            !x.test(u.negr[u.right[c]]))
          hit = r;
        break;
      }
      default:
        break;
    }
  });
  return hit;
}

int undetermined_idx(const Ranked& u, const Mask& x) {
  Mask sub;
  x.for_each([&](int r) { sub |= u.submask[r]; });
  int hit = -1;
  sub.for_each([&](int r) {
    if (hit >= 0) return;
    if (x.test(r)) return;
    int nr = u.negr[r];
    assert(nr >= 0);  // undetermined candidates sit in the positive closure
    if (!x.test(nr)) hit = r;
  });
  return hit;
}

// Guard partitions and modal obligations of a label, in canonical order.
struct IdxFacts {
  std::vector<std::pair<long long, int>> keys;            // (agent, vid)
  std::vector<std::vector<int>> guards;                   // per key, ascending
  std::vector<std::pair<long long, int>> neg_boxes;       // (agent, body rank)
  std::vector<std::tuple<long long, int, int>> neg_nablas;  // (agent, body, vid)

  // key positions forming E(agent), ascending by value name
  std::vector<std::pair<long long, std::vector<int>>> agent_key_cache;

  const std::vector<int>& agent_keys(long long a) const {
    static const std::vector<int> none;
    for (const auto& [agent, positions] : agent_key_cache)
      if (agent == a) return positions;
    return none;
  }
};

IdxFacts idx_facts(const Ranked& u, const Mask& x) {
  IdxFacts facts;
  std::map<std::pair<long long, int>, std::vector<int>> gmap;
  x.for_each([&](int r) {
    if (u.kinds[r] == Kind::Nabla) {
      gmap[{u.agent[r], u.vid[r]}].push_back(u.child[r]);
    } else if (u.kinds[r] == Kind::Not) {
      int c = u.child[r];
      if (u.kinds[c] == Kind::Box)
        facts.neg_boxes.emplace_back(u.agent[c], u.child[c]);
      else if (u.kinds[c] == Kind::Nabla)
        facts.neg_nablas.emplace_back(u.agent[c], u.child[c], u.vid[c]);
    }
  });
  for (auto& [key, list] : gmap) {
    std::sort(list.begin(), list.end());
    facts.keys.push_back(key);
    facts.guards.push_back(std::move(list));
  }
  for (std::size_t k = 0; k < facts.keys.size(); ++k) {
    long long a = facts.keys[k].first;
    if (facts.agent_key_cache.empty() || facts.agent_key_cache.back().first != a)
      facts.agent_key_cache.emplace_back(a, std::vector<int>{});
    facts.agent_key_cache.back().second.push_back(static_cast<int>(k));
  }
  return facts;
}

// One guard partition: members of `never` fail at every successor, each cell
// groups guards sharing a successor value. Mirrors StateStream::GuardKey.
struct IdxPartition {
  std::vector<int> never;               // ascending guard ranks
  std::vector<std::vector<int>> cells;  // sorted; cells[0] empty
  std::vector<int> realized;            // ascending union of the cells
};

struct IdxGuardCursor {
  std::vector<int> guards;
  std::uint64_t never_mask = 0;
  std::vector<int> growth;
  IdxPartition current;

  void rebuild() {
    current = IdxPartition{};
    std::vector<int> rest;
    for (std::size_t j = 0; j < guards.size(); ++j) {
      if ((never_mask >> j) & 1ull)
        current.never.push_back(guards[j]);
      else
        rest.push_back(guards[j]);
    }
    std::vector<std::vector<int>> blocks;
    for (std::size_t j = 0; j < rest.size(); ++j) {
      std::size_t b = static_cast<std::size_t>(growth[j]);
      if (b >= blocks.size()) blocks.resize(b + 1);
      blocks[b].push_back(rest[j]);
    }
    current.cells.emplace_back();
    for (auto& blk : blocks) current.cells.push_back(std::move(blk));
    std::sort(current.cells.begin(), current.cells.end());
    current.realized = rest;
  }

  bool advance() {
    if (next_growth(growth)) {
      rebuild();
      return true;
    }
    ++never_mask;
    bool wrapped = never_mask == (1ull << guards.size());
    if (wrapped) never_mask = 0;
    growth.assign(guards.size() - std::popcount(never_mask), 0);
    rebuild();
    return !wrapped;
  }
};

// Snapshot of one enumerated state, enough to build labeled successors.
struct IdxState {
  std::vector<IdxPartition> parts;                 // aligned with facts.keys
  std::vector<std::vector<int>> box_cell;          // per neg_box, per E(i) key pos
  std::vector<std::vector<std::pair<int, int>>> nabla_cell;  // per neg_nabla
};

struct IdxStream {
  std::shared_ptr<const IdxFacts> facts_ptr;
  const IdxFacts& facts;
  std::vector<IdxGuardCursor> cursors;
  struct Digit {
    int limit;
    int value;
  };
  std::vector<Digit> digits;
  bool started = false;
  bool done = false;

  explicit IdxStream(std::shared_ptr<const IdxFacts> f)
      : facts_ptr(std::move(f)), facts(*facts_ptr) {
    for (std::size_t k = 0; k < facts.keys.size(); ++k) {
      if (facts.guards[k].size() >= 62)
        throw std::invalid_argument("guard set too large to enumerate");
      IdxGuardCursor c;
      c.guards = facts.guards[k];
      c.growth.assign(c.guards.size(), 0);
      c.rebuild();
      cursors.push_back(std::move(c));
    }
  }

  int cell_count(int key_pos) const {
    return static_cast<int>(cursors[key_pos].current.cells.size());
  }

  void reset_digits() {
    digits.clear();
    for (const auto& [a, body] : facts.neg_boxes) {
      (void)body;
      for (int kp : facts.agent_keys(a)) digits.push_back({cell_count(kp), 0});
    }
    for (const auto& [a, body, d0] : facts.neg_nablas) {
      (void)body;
      for (int kp : facts.agent_keys(a)) {
        int cells = cell_count(kp);
        if (facts.keys[kp].second == d0)
          digits.push_back({joint_pair_count(cells), 0});
        else {
          digits.push_back({cells, 0});
          digits.push_back({cells, 0});
        }
      }
    }
  }

  IdxState materialize() const {
    IdxState out;
    for (const auto& c : cursors) out.parts.push_back(c.current);
    std::size_t di = 0;
    for (const auto& [a, body] : facts.neg_boxes) {
      (void)body;
      std::vector<int> choice;
      for (int kp : facts.agent_keys(a)) {
        (void)kp;
        choice.push_back(digits[di++].value);
      }
      out.box_cell.push_back(std::move(choice));
    }
    for (const auto& [a, body, d0] : facts.neg_nablas) {
      (void)body;
      std::vector<std::pair<int, int>> choice;
      for (int kp : facts.agent_keys(a)) {
        if (facts.keys[kp].second == d0) {
          choice.push_back(decode_joint_pair(cell_count(kp), digits[di++].value));
        } else {
          choice.emplace_back(digits[di].value, digits[di + 1].value);
          di += 2;
        }
      }
      out.nabla_cell.push_back(std::move(choice));
    }
    assert(di == digits.size());
    return out;
  }

  std::optional<IdxState> next() {
    if (done) return std::nullopt;
    if (!started) {
      started = true;
      reset_digits();
      return materialize();
    }
    for (int i = static_cast<int>(digits.size()) - 1; i >= 0; --i) {
      if (++digits[i].value < digits[i].limit) return materialize();
      digits[i].value = 0;
    }
    for (int i = static_cast<int>(cursors.size()) - 1; i >= 0; --i) {
      if (cursors[i].advance()) {
        reset_digits();
        return materialize();
      }
    }
    done = true;
    return std::nullopt;
  }
};

Rule classify_idx(const Ranked& u, const Mask& x, bool has_state) {
  if (blatant_idx(u, x)) return Rule::LeafUnsat;
  if (violating_idx(u, x) >= 0) return Rule::Decompose;
  if (undetermined_idx(u, x) >= 0) return Rule::Complete;
  bool has_guard = false, has_obligation = false;
  x.for_each([&](int r) {
    if (u.kinds[r] == Kind::Nabla) has_guard = true;
    if (u.kinds[r] == Kind::Not &&
        (u.kinds[u.child[r]] == Kind::Box || u.kinds[u.child[r]] == Kind::Nabla))
      has_obligation = true;
  });
  if (!has_state) return (has_guard || has_obligation) ? Rule::FormStates : Rule::LeafSat;
  return has_obligation ? Rule::Modal : Rule::LeafSat;
}

// Label of the labeled successor for one obligation: the witness formula,
// the unboxed members, and the negations of every guard outside the chosen
// cells.
Mask modal_label_idx(const Ranked& u, const Mask& x,
                     const IdxState& s, long long a, int witness_rank,
                     const std::vector<int>& agent_key_pos,
                     const std::vector<int>& chosen_cells) {
  Mask out;
  out.set(witness_rank);
  x.for_each([&](int r) {
    if (u.kinds[r] == Kind::Box && u.agent[r] == a) out.set(u.child[r]);
  });
  for (std::size_t j = 0; j < agent_key_pos.size(); ++j) {
    const IdxPartition& part = s.parts[agent_key_pos[j]];
    const std::vector<int>& cell = part.cells[chosen_cells[j]];
    for (int g : part.never) out.set(u.negr[g]);
    for (int g : part.realized)
      if (!std::binary_search(cell.begin(), cell.end(), g)) out.set(u.negr[g]);
  }
  return out;
}

// k-th labeled successor of a state node, in the member order of the label.
std::optional<Mask> modal_child_idx(const Ranked& u, const Mask& x,
                                    const IdxFacts& facts, const IdxState& s,
                                    std::size_t index) {
  std::size_t box_i = 0, nab_i = 0, k = 0;
  std::optional<Mask> out;
  x.for_each([&](int r) {
    if (out || u.kinds[r] != Kind::Not) return;
    int c = u.child[r];
    if (u.kinds[c] == Kind::Box) {
      if (k == index) {
        const auto& kps = facts.agent_keys(u.agent[c]);
        std::vector<int> chosen = s.box_cell[box_i];
        out = modal_label_idx(u, x, s, u.agent[c], u.negr[u.child[c]], kps,
                              chosen);
      }
      ++k;
      ++box_i;
    } else if (u.kinds[c] == Kind::Nabla) {
      for (int side = 0; side < 2; ++side) {
        if (k == index && !out) {
          const auto& kps = facts.agent_keys(u.agent[c]);
          std::vector<int> chosen;
          for (std::size_t j = 0; j < kps.size(); ++j)
            chosen.push_back(side == 0 ? s.nabla_cell[nab_i][j].first
                                       : s.nabla_cell[nab_i][j].second);
          out = modal_label_idx(u, x, s, u.agent[c], u.child[c], kps, chosen);
        }
        ++k;
      }
      ++nab_i;
    }
  });
  return out;
}

struct IdxFrame {
  Mask label;
  Rule rule = Rule::LeafSat;
  int depth = 0;
  int chain = 1;
  bool visited = false;
  bool agg = false;
  bool has_state = false;
  std::size_t next_child = 0;
  std::shared_ptr<const IdxFacts> facts;
  std::optional<IdxState> state;
  std::optional<IdxStream> stream;
};

bool run_dfs_idx(const Ranked& u, const Mask& root_label, TableauStats& st,
                 const TraceSink& trace) {
  std::vector<IdxFrame> stack;
  stack.reserve(64);
  {
    IdxFrame root;
    root.label = root_label;
    stack.push_back(std::move(root));
  }
  std::optional<bool> result;

  while (!stack.empty()) {
    IdxFrame& fr = stack.back();

    if (!fr.visited) {
      fr.visited = true;
      fr.rule = classify_idx(u, fr.label, fr.has_state);
      ++st.nodes_visited;
      st.max_depth = std::max(st.max_depth, fr.depth);
      st.max_unlabeled_chain = std::max(st.max_unlabeled_chain, fr.chain);
      if (trace) {
        int size = 0;
        fr.label.for_each([&](int) { ++size; });
        trace(std::string(rule_name(fr.rule)) + " size=" + std::to_string(size) +
              " depth=" + std::to_string(fr.depth));
      }
      if (fr.rule == Rule::LeafSat || fr.rule == Rule::LeafUnsat) {
        result = fr.rule == Rule::LeafSat;
        stack.pop_back();
        continue;
      }
      fr.agg = fr.rule == Rule::Modal;
      if (fr.rule == Rule::FormStates || fr.rule == Rule::Modal)
        fr.facts = std::make_shared<const IdxFacts>(idx_facts(u, fr.label));
    } else if (result.has_value()) {
      bool r = result.value_or(false);
      result.reset();
      if (fr.rule == Rule::Modal) {
        if (!r) {
          result = false;
          stack.pop_back();
          continue;
        }
      } else if (r) {
        result = true;
        stack.pop_back();
        continue;
      }
    }

    IdxFrame child;
    bool have_child = false;
    switch (fr.rule) {
      case Rule::Decompose: {
        int v = violating_idx(u, fr.label);
        Mask base = fr.label;
        if (u.kinds[v] == Kind::And) {
          if (fr.next_child == 0) {
            base.set(u.left[v]);
            base.set(u.right[v]);
            child.label = base;
            have_child = true;
          }
        } else if (u.kinds[u.child[v]] == Kind::Not) {
          if (fr.next_child == 0) {
            base.set(u.child[u.child[v]]);
            child.label = base;
            have_child = true;
          }
        } else {
          if (fr.next_child < 2) {
            int c = u.child[v];
            base.set(fr.next_child == 0 ? u.negr[u.left[c]] : u.negr[u.right[c]]);
            child.label = base;
            have_child = true;
          }
        }
        if (have_child) {
          ++fr.next_child;
          child.chain = fr.chain + 1;
        }
        break;
      }
      case Rule::Complete: {
        if (fr.next_child < 2) {
          int r = undetermined_idx(u, fr.label);
          Mask base = fr.label;
          base.set(fr.next_child == 0 ? r : u.negr[r]);
          ++fr.next_child;
          child.label = base;
          child.chain = fr.chain + 1;
          have_child = true;
        }
        break;
      }
      case Rule::FormStates: {
        if (!fr.stream) fr.stream.emplace(fr.facts);
        if (auto s = fr.stream->next()) {
          ++st.states_enumerated;
          child.label = fr.label;
          child.has_state = true;
          child.facts = fr.facts;
          child.state = std::move(*s);
          child.chain = fr.chain + 1;
          have_child = true;
        }
        break;
      }
      case Rule::Modal: {
        if (auto next = modal_child_idx(u, fr.label, *fr.facts, *fr.state,
                                        fr.next_child)) {
          ++fr.next_child;
          child.label = *next;
          child.chain = 1;
          have_child = true;
        }
        break;
      }
      default:
        break;
    }

    if (have_child) {
      child.depth = fr.depth + 1;
      stack.push_back(std::move(child));
    } else {
      result = fr.agg;
      stack.pop_back();
    }
  }
  assert(result.has_value());
  return result.value_or(false);
}

// Re-descends into satisfiable branches only and assembles the witness
// model: worlds are the state nodes touched, labeled edges become the
// relation, constraints become the value assignment.
class ModelBuilder {
public:
  using SatCheck = std::function<bool(const FormulaSet&)>;

  ModelBuilder(std::set<std::string> dnames, SatCheck sat)
      : dnames_(std::move(dnames)), sat_(std::move(sat)) {}

  std::string extract(const FormulaSet& label, std::optional<StateInfo> info,
                      const std::map<std::string, ValueToken>& constraints) {
    switch (classify(label, info.has_value())) {
      case Rule::LeafSat:
        return add_world(label, constraints);
      case Rule::Decompose:
      case Rule::Complete: {
        auto kids = violating_member(label).has_value()
                        ? expand_propositional(label)
                        : expand_full(label, subformulas(label));
        for (auto& kid : kids)
          if (sat_(kid)) return extract(kid, std::nullopt, constraints);
        throw std::logic_error("extraction: no satisfiable child");
      }
      case Rule::FormStates: {
        StateStream stream(label);
        while (auto s = stream.next())
          if (state_feasible(label, *s)) return extract(label, std::move(*s), constraints);
        throw std::logic_error("extraction: no satisfiable state");
      }
      case Rule::Modal: {
        std::string id = add_world(label, constraints);
        for (auto& ls : labeled_successors(label, *info)) {
          std::string target = extract(ls.label, std::nullopt, ls.constraints);
          model_.relations[ls.agent].emplace_back(id, target);
        }
        return id;
      }
      case Rule::LeafUnsat:
        break;
    }
    throw std::logic_error("extraction reached a contradictory node");
  }

  Model finish() {
    model_.root = model_.worlds.empty() ? "" : model_.worlds.front();
    for (auto& [agent, pairs] : model_.relations) std::sort(pairs.begin(), pairs.end());
    return std::move(model_);
  }

private:
  // A state node is satisfiable iff all its labeled successors are; a state
  // without obligations is a satisfiable leaf.
  bool state_feasible(const FormulaSet& label, const StateInfo& s) {
    for (auto& ls : labeled_successors(label, s))
      if (!sat_(ls.label)) return false;
    return true;
  }

  std::string add_world(const FormulaSet& label,
                        const std::map<std::string, ValueToken>& constraints) {
    std::string id = "s" + std::to_string(counter_++);
    model_.worlds.push_back(id);
    model_.valuation[id];
    for (Formula f : label)
      if (f.kind() == Kind::Prop) model_.valuation[id].insert(f.prop_name());
    for (const auto& d : dnames_) {
      auto it = constraints.find(d);
      model_.values[id].emplace(d, it != constraints.end() ? it->second
                                                           : ValueToken::def(0));
    }
    return id;
  }

  Model model_;
  int counter_ = 0;
  std::set<std::string> dnames_;
  SatCheck sat_;
};

}  // namespace

Verdict decide(Formula f, bool want_model, const TraceSink& trace) {
  Verdict verdict;
  FormulaSet root{f};
  Ranked ranked(f);
  bool indexed = ranked.fs.size() <= kMaxRanked;
  if (indexed)
    verdict.satisfiable = run_dfs_idx(ranked, ranked.to_mask(root), verdict.stats, trace);
  else
    verdict.satisfiable = run_dfs_sets(root, std::nullopt, verdict.stats, trace);

  if (verdict.satisfiable && want_model) {
    ModelBuilder::SatCheck sat;
    if (indexed)
      sat = [&ranked](const FormulaSet& label) {
        TableauStats scratch;
        return run_dfs_idx(ranked, ranked.to_mask(label), scratch, {});
      };
    else
      sat = [](const FormulaSet& label) {
        TableauStats scratch;
        return run_dfs_sets(label, std::nullopt, scratch, {});
      };
    ModelBuilder builder(value_names(f), std::move(sat));
    builder.extract(root, std::nullopt, {});
    verdict.model = builder.finish();
  }
  return verdict;
}

Verdict decide_reference(Formula f, bool want_model, const TraceSink& trace) {
  Verdict verdict;
  FormulaSet root{f};
  verdict.satisfiable = run_dfs_sets(root, std::nullopt, verdict.stats, trace);
  if (verdict.satisfiable && want_model) {
    ModelBuilder builder(value_names(f), [](const FormulaSet& label) {
      TableauStats scratch;
      return run_dfs_sets(label, std::nullopt, scratch, {});
    });
    builder.extract(root, std::nullopt, {});
    verdict.model = builder.finish();
  }
  return verdict;
}

}  // namespace kvl
