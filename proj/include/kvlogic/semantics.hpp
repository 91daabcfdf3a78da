#ifndef KVLOGIC_SEMANTICS_HPP
#define KVLOGIC_SEMANTICS_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kvlogic/formula.hpp"

namespace kvl {

// Value assigned to a (value name, world) pair. Cell tokens carry the
// canonical renderings of the formulas in a guard cell; bullet and circ are
// the two reserved fresh values; default tokens cover enumeration and
// unconstrained entries. Distinct kinds never compare equal.
class ValueToken {
public:
  enum class Kind { Default, Bullet, Circ, Cell };

  ValueToken() : ValueToken(Kind::Default, 0, {}) {}

  static ValueToken def(int n) { return ValueToken(Kind::Default, n, {}); }
  static ValueToken bullet() { return ValueToken(Kind::Bullet, 0, {}); }
  static ValueToken circ() { return ValueToken(Kind::Circ, 0, {}); }
  static ValueToken cell(const FormulaSet& members);

  Kind kind() const noexcept { return kind_; }
  int number() const noexcept { return n_; }
  const std::vector<std::string>& members() const noexcept { return members_; }

  // "default:<n>" | "bullet" | "circ" | "cell:{<renderings joined by ';'>}"
  std::string str() const;
  static ValueToken from_string(const std::string& text);

  bool operator==(const ValueToken&) const = default;
  bool operator<(const ValueToken& o) const {
    return std::tie(kind_, n_, members_) < std::tie(o.kind_, o.n_, o.members_);
  }

private:
  ValueToken(Kind k, int n, std::vector<std::string> m)
      : kind_(k), n_(n), members_(std::move(m)) {}
  Kind kind_;
  int n_;
  std::vector<std::string> members_;  // sorted
};

// Pointed Kripke structure with per-agent relations and a value assignment.
// Entries missing from `values` read as default:0, which keeps the
// assignment total without spelling out every pair.
struct Model {
  std::vector<std::string> worlds;
  std::string root;
  std::map<long long, std::vector<std::pair<std::string, std::string>>> relations;
  std::map<std::string, std::set<std::string>> valuation;  // world -> true props
  std::map<std::string, std::map<std::string, ValueToken>> values;  // world -> vname -> token

  bool has_world(const std::string& w) const;
  ValueToken value_of(const std::string& vname, const std::string& world) const;
};

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Truth at a world. Agents without a relation entry have the empty relation.
// Throws ModelError for an unknown world id.
bool eval(const Model& m, const std::string& world, Formula f);

// Exhaustive deterministic search over pointed models with at most
// `max_worlds` worlds, agents/propositions/value names restricted to those
// in f, and value tokens drawn from default:0..max_values-1. Models whose
// worlds are not all reachable from the root are skipped; their reachable
// parts occur at a smaller world count. First hit wins; absence means "no
// small model", not unsatisfiability.
std::optional<Model> oracle_sat(Formula f, int max_worlds, int max_values);

std::string to_json(const Model& m);
Model model_from_json(std::string_view text);

}  // namespace kvl

#endif
