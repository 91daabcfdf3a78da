#include "kvlogic/semantics.hpp"

#include <algorithm>
#include <cassert>

#include <json.hpp>

namespace kvl {

ValueToken ValueToken::cell(const FormulaSet& members) {
  std::vector<std::string> texts;
  texts.reserve(members.size());
  for (Formula f : members) texts.push_back(f.str());
  return ValueToken(Kind::Cell, 0, std::move(texts));
}

std::string ValueToken::str() const {
  switch (kind_) {
    case Kind::Default:
      return "default:" + std::to_string(n_);
    case Kind::Bullet:
      return "bullet";
    case Kind::Circ:
      return "circ";
    case Kind::Cell: {
      std::string out = "cell:{";
      for (std::size_t i = 0; i < members_.size(); ++i) {
        if (i) out += ";";
        out += members_[i];
      }
      return out + "}";
    }
  }
  return {};
}

ValueToken ValueToken::from_string(const std::string& text) {
  if (text == "bullet") return bullet();
  if (text == "circ") return circ();
  if (text.starts_with("default:")) {
    try {
      return def(std::stoi(text.substr(8)));
    } catch (const std::exception&) {
      throw ModelError("bad default token: " + text);
    }
  }
  if (text.starts_with("cell:{") && text.ends_with("}")) {
    std::string body = text.substr(6, text.size() - 7);
    std::vector<std::string> members;
    std::size_t start = 0;
    while (start < body.size()) {
      std::size_t semi = body.find(';', start);
      if (semi == std::string::npos) semi = body.size();
      members.push_back(body.substr(start, semi - start));
      start = semi + 1;
    }
    std::sort(members.begin(), members.end());
    return ValueToken(Kind::Cell, 0, std::move(members));
  }
  throw ModelError("bad value token: " + text);
}

bool Model::has_world(const std::string& w) const {
  return std::find(worlds.begin(), worlds.end(), w) != worlds.end();
}

ValueToken Model::value_of(const std::string& vname, const std::string& world) const {
  auto wit = values.find(world);
  if (wit != values.end()) {
    auto vit = wit->second.find(vname);
    if (vit != wit->second.end()) return vit->second;
  }
  return ValueToken::def(0);
}

namespace {

std::vector<std::string> successors(const Model& m, long long agent,
                                    const std::string& world) {
  std::vector<std::string> out;
  auto it = m.relations.find(agent);
  if (it == m.relations.end()) return out;
  for (const auto& [src, dst] : it->second)
    if (src == world) out.push_back(dst);
  return out;
}

bool eval_rec(const Model& m, const std::string& w, Formula f) {
  switch (f.kind()) {
    case Kind::Top:
      return true;
    case Kind::Prop: {
      auto it = m.valuation.find(w);
      return it != m.valuation.end() && it->second.count(f.prop_name()) > 0;
    }
    case Kind::Not:
      return !eval_rec(m, w, f.child());
    case Kind::And:
      return eval_rec(m, w, f.left()) && eval_rec(m, w, f.right());
    case Kind::Box: {
      for (const auto& t : successors(m, f.agent(), w))
        if (!eval_rec(m, t, f.child())) return false;
      return true;
    }
    case Kind::Nabla: {
      // All successors satisfying the body must agree on the value name.
      std::optional<ValueToken> seen;
      for (const auto& t : successors(m, f.agent(), w)) {
        if (!eval_rec(m, t, f.child())) continue;
        ValueToken v = m.value_of(f.value_name(), t);
        if (!seen)
          seen = v;
        else if (!(*seen == v))
          return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace

bool eval(const Model& m, const std::string& world, Formula f) {
  if (!m.has_world(world)) throw ModelError("unknown world: " + world);
  return eval_rec(m, world, f);
}

// ---------------------------------------------------------------------------
// Brute-force search. Candidates are enumerated over a compact indexed
// representation; the Model is materialized only for the returned hit.

namespace {

struct Candidate {
  int n;                                  // world count, root = 0
  std::vector<long long> agents;          // sorted
  std::vector<std::string> props;         // sorted
  std::vector<std::string> vnames;        // sorted
  std::vector<unsigned> rel;              // [agent][src] -> successor bitmask
  std::vector<unsigned> val;              // [prop] -> world bitmask
  std::vector<int> dval;                  // [vname][world] -> token number

  unsigned succ_mask(std::size_t agent_idx, int w) const {
    return rel[agent_idx * n + w];
  }
};

int agent_index(const Candidate& c, long long agent) {
  auto it = std::lower_bound(c.agents.begin(), c.agents.end(), agent);
  if (it == c.agents.end() || *it != agent) return -1;
  return static_cast<int>(it - c.agents.begin());
}

bool eval_fast(const Candidate& c, int w, Formula f) {
  switch (f.kind()) {
    case Kind::Top:
      return true;
    case Kind::Prop: {
      auto it = std::lower_bound(c.props.begin(), c.props.end(), f.prop_name());
      std::size_t idx = static_cast<std::size_t>(it - c.props.begin());
      return (c.val[idx] >> w) & 1u;
    }
    case Kind::Not:
      return !eval_fast(c, w, f.child());
    case Kind::And:
      return eval_fast(c, w, f.left()) && eval_fast(c, w, f.right());
    case Kind::Box: {
      int a = agent_index(c, f.agent());
      if (a < 0) return true;
      unsigned mask = c.succ_mask(a, w);
      for (int t = 0; t < c.n; ++t)
        if ((mask >> t) & 1u)
          if (!eval_fast(c, t, f.child())) return false;
      return true;
    }
    case Kind::Nabla: {
      int a = agent_index(c, f.agent());
      if (a < 0) return true;
      auto it = std::lower_bound(c.vnames.begin(), c.vnames.end(), f.value_name());
      std::size_t d = static_cast<std::size_t>(it - c.vnames.begin());
      unsigned mask = c.succ_mask(a, w);
      int seen = -1;
      for (int t = 0; t < c.n; ++t) {
        if (!((mask >> t) & 1u)) continue;
        if (!eval_fast(c, t, f.child())) continue;
        int v = c.dval[d * c.n + t];
        if (seen < 0)
          seen = v;
        else if (seen != v)
          return false;
      }
      return true;
    }
  }
  return false;
}

bool all_reachable(const Candidate& c) {
  unsigned seen = 1u;  // root
  unsigned frontier = 1u;
  while (frontier) {
    unsigned next = 0;
    for (int w = 0; w < c.n; ++w) {
      if (!((frontier >> w) & 1u)) continue;
      for (std::size_t a = 0; a < c.agents.size(); ++a) next |= c.succ_mask(a, w);
    }
    frontier = next & ~seen;
    seen |= next;
  }
  return seen == (1u << c.n) - 1u;
}

Model materialize(const Candidate& c) {
  Model m;
  for (int w = 0; w < c.n; ++w) m.worlds.push_back("w" + std::to_string(w));
  m.root = "w0";
  for (std::size_t a = 0; a < c.agents.size(); ++a) {
    auto& pairs = m.relations[c.agents[a]];
    for (int s = 0; s < c.n; ++s)
      for (int t = 0; t < c.n; ++t)
        if ((c.succ_mask(a, s) >> t) & 1u)
          pairs.emplace_back(m.worlds[s], m.worlds[t]);
  }
  for (std::size_t p = 0; p < c.props.size(); ++p)
    for (int w = 0; w < c.n; ++w)
      if ((c.val[p] >> w) & 1u) m.valuation[m.worlds[w]].insert(c.props[p]);
  for (std::size_t d = 0; d < c.vnames.size(); ++d)
    for (int w = 0; w < c.n; ++w)
      m.values[m.worlds[w]][c.vnames[d]] = ValueToken::def(c.dval[d * c.n + w]);
  return m;
}

}  // namespace

std::optional<Model> oracle_sat(Formula f, int max_worlds, int max_values) {
  assert(max_worlds >= 1 && max_values >= 1);

  std::set<long long> agent_set;
  for (Formula s : subformulas(f))
    if (s.kind() == Kind::Box || s.kind() == Kind::Nabla) agent_set.insert(s.agent());
  std::set<std::string> prop_set;
  for (Formula s : subformulas(f))
    if (s.kind() == Kind::Prop) prop_set.insert(s.prop_name());
  std::set<std::string> vname_set = value_names(f);

  Candidate c;
  c.agents.assign(agent_set.begin(), agent_set.end());
  c.props.assign(prop_set.begin(), prop_set.end());
  c.vnames.assign(vname_set.begin(), vname_set.end());

  for (int n = 1; n <= max_worlds; ++n) {
    c.n = n;
    std::size_t rel_bits = c.agents.size() * static_cast<std::size_t>(n) * n;
    std::size_t val_bits = c.props.size() * static_cast<std::size_t>(n);
    std::size_t dval_digits = c.vnames.size() * static_cast<std::size_t>(n);
    if (rel_bits >= 62 || val_bits >= 30)
      throw std::invalid_argument("oracle search space too large");
    std::uint64_t dspace = 1;
    for (std::size_t k = 0; k < dval_digits; ++k) {
      if (dspace > (1ull << 58)) throw std::invalid_argument("oracle search space too large");
      dspace *= static_cast<std::uint64_t>(max_values);
    }

    c.rel.assign(c.agents.size() * n, 0);
    c.val.assign(c.props.size(), 0);
    c.dval.assign(dval_digits, 0);

    for (std::uint64_t r = 0; r < (1ull << rel_bits); ++r) {
      // bit ((a*n)+s)*n + t  <=>  s ->_a t
      for (std::size_t a = 0; a < c.agents.size(); ++a)
        for (int s = 0; s < n; ++s) {
          unsigned mask = 0;
          for (int t = 0; t < n; ++t)
            if ((r >> ((a * n + s) * n + t)) & 1ull) mask |= 1u << t;
          c.rel[a * n + s] = mask;
        }
      if (n > 1 && !all_reachable(c)) continue;

      for (std::uint64_t v = 0; v < (1ull << val_bits); ++v) {
        for (std::size_t p = 0; p < c.props.size(); ++p) {
          unsigned mask = 0;
          for (int w = 0; w < n; ++w)
            if ((v >> (p * n + w)) & 1ull) mask |= 1u << w;
          c.val[p] = mask;
        }

        for (std::uint64_t dc = 0; dc < dspace; ++dc) {
          std::uint64_t rest = dc;
          for (std::size_t k = 0; k < dval_digits; ++k) {
            c.dval[k] = static_cast<int>(rest % max_values);
            rest /= max_values;
          }
          if (eval_fast(c, 0, f)) return materialize(c);
        }
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON I/O per the documented model file format.

std::string to_json(const Model& m) {
  nlohmann::json j;
  j["worlds"] = m.worlds;
  j["root"] = m.root;
  j["relations"] = nlohmann::json::object();
  for (const auto& [agent, pairs] : m.relations) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [s, t] : pairs) arr.push_back({s, t});
    j["relations"][std::to_string(agent)] = arr;
  }
  j["valuation"] = nlohmann::json::object();
  for (const auto& [w, props] : m.valuation)
    j["valuation"][w] = std::vector<std::string>(props.begin(), props.end());
  j["values"] = nlohmann::json::object();
  for (const auto& [w, entry] : m.values) {
    nlohmann::json obj = nlohmann::json::object();
    for (const auto& [vname, tok] : entry) obj[vname] = tok.str();
    j["values"][w] = obj;
  }
  return j.dump(2) + "\n";
}

Model model_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("bad model file: ") + e.what());
  }
  try {
    Model m;
    m.worlds = j.at("worlds").get<std::vector<std::string>>();
    m.root = j.at("root").get<std::string>();
    if (!m.has_world(m.root)) throw ModelError("root is not a listed world");
    if (j.contains("relations"))
      for (const auto& [key, arr] : j["relations"].items()) {
        long long agent = std::stoll(key);
        if (agent <= 0) throw ModelError("agent id must be positive: " + key);
        auto& pairs = m.relations[agent];
        for (const auto& pair : arr) {
          std::string s = pair.at(0).get<std::string>();
          std::string t = pair.at(1).get<std::string>();
          if (!m.has_world(s) || !m.has_world(t))
            throw ModelError("relation endpoint is not a listed world");
          pairs.emplace_back(std::move(s), std::move(t));
        }
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
      }
    if (j.contains("valuation"))
      for (const auto& [w, arr] : j["valuation"].items()) {
        if (!m.has_world(w)) throw ModelError("valuation world not listed: " + w);
        for (const auto& p : arr) m.valuation[w].insert(p.get<std::string>());
      }
    if (j.contains("values"))
      for (const auto& [w, obj] : j["values"].items()) {
        if (!m.has_world(w)) throw ModelError("values world not listed: " + w);
        for (const auto& [vname, tok] : obj.items())
          m.values[w].emplace(vname, ValueToken::from_string(tok.get<std::string>()));
      }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("bad model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelError(std::string("bad model file: ") + e.what());
  }
}

}  // namespace kvl
