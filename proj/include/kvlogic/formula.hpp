#ifndef KVLOGIC_FORMULA_HPP
#define KVLOGIC_FORMULA_HPP

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kvl {

enum class Kind : unsigned char { Top, Prop, Not, And, Box, Nabla };

namespace detail {
struct Node;
}

// Immutable, interned formula handle. Only the primitive connectives appear
// in the tree; the sugared forms (F, |, ->, <i>) are rewritten away by the
// builders and the parser. Equality is pointer equality on the intern pool;
// ordering is lexicographic on the canonical rendering.
class Formula {
public:
  Formula() = delete;

  Kind kind() const noexcept;

  const std::string& prop_name() const;   // Prop
  long long agent() const;                // Box, Nabla
  const std::string& value_name() const;  // Nabla
  Formula child() const;                  // Not, Box, Nabla
  Formula left() const;                   // And
  Formula right() const;                  // And

  // Canonical fully-parenthesized rendering; parse(str()) round-trips.
  const std::string& str() const noexcept;

  int size() const noexcept;         // node count
  int modal_depth() const noexcept;  // [i] and Kv each add one level

  bool operator==(const Formula&) const noexcept = default;
  bool operator<(const Formula& o) const noexcept;

  const detail::Node* raw() const noexcept { return node_; }

private:
  explicit Formula(const detail::Node* n) : node_(n) {}
  const detail::Node* node_;

  friend Formula top();
  friend Formula prop(std::string_view);
  friend Formula neg(Formula);
  friend Formula conj(Formula, Formula);
  friend Formula box(long long, Formula);
  friend Formula nabla(long long, Formula, std::string_view);
};

// Primitive builders. Identifier and agent-id invariants are enforced here
// so that every reachable Formula value round-trips through the parser:
// proposition names are lowercase identifiers not starting with 'd', value
// names are identifiers starting with 'd', agent ids are positive.
Formula top();
Formula prop(std::string_view name);
Formula neg(Formula f);
Formula conj(Formula a, Formula b);
Formula box(long long agent, Formula f);
Formula nabla(long long agent, Formula f, std::string_view value);

// Abbreviations, normalized on construction.
Formula bottom();                        // ~T
Formula disj(Formula a, Formula b);      // ~(~a & ~b)
Formula implies(Formula a, Formula b);   // ~(a & ~b)
Formula diamond(long long agent, Formula f);  // ~[i]~f
// (a -> b) & (b -> a); not part of the concrete grammar but used by proofs.
Formula iff(Formula a, Formula b);

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t pos)
      : std::runtime_error(what), position(pos) {}
  std::size_t position;  // byte offset into the input
};

Formula parse(std::string_view text);

inline const std::string& to_string(Formula f) { return f.str(); }

// Duplicate-free formula collection ordered by the canonical rendering.
class FormulaSet {
public:
  FormulaSet() = default;
  FormulaSet(std::initializer_list<Formula> fs);

  bool insert(Formula f);  // returns false if already present
  void insert_all(const FormulaSet& other);
  bool contains(Formula f) const;
  bool empty() const noexcept { return items_.empty(); }
  std::size_t size() const noexcept { return items_.size(); }

  FormulaSet with(Formula f) const;

  auto begin() const noexcept { return items_.begin(); }
  auto end() const noexcept { return items_.end(); }
  Formula operator[](std::size_t i) const { return items_[i]; }

  bool operator==(const FormulaSet&) const noexcept = default;
  // Lexicographic on the sorted element sequence; the empty set is least.
  bool operator<(const FormulaSet& o) const noexcept;

  std::string str() const;  // "{f1, f2, ...}" in canonical order

private:
  std::vector<Formula> items_;  // sorted, unique
};

// Subformulas, where the subformulas of Kv_i(f, d) are itself plus the
// subformulas of f (the value name contributes nothing).
FormulaSet subformulas(Formula f);
FormulaSet subformulas(const FormulaSet& xs);

// subformulas(f) closed under single negation.
FormulaSet sub_plus(Formula f);
FormulaSet sub_plus(const FormulaSet& xs);

std::set<std::string> value_names(Formula f);
std::set<std::string> value_names(const FormulaSet& xs);

// {~f | f in xs}
FormulaSet negate_all(const FormulaSet& xs);
// {f | [agent]f in xs}
FormulaSet unbox(const FormulaSet& xs, long long agent);

}  // namespace kvl

#endif
