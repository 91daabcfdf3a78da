#include "kvlogic/formula.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <deque>
#include <mutex>
#include <unordered_map>

namespace kvl {

namespace detail {

struct Node {
  Kind kind;
  long long agent = 0;
  std::string name;          // prop name or value name
  const Node* a = nullptr;   // child / left
  const Node* b = nullptr;   // right
  std::string text;          // canonical rendering
  int size = 1;
  int modal_depth = 0;
};

namespace {

struct Key {
  Kind kind;
  long long agent;
  std::string_view name;
  const Node* a;
  const Node* b;
  bool operator==(const Key&) const = default;
};

struct KeyHash {
  std::size_t operator()(const Key& k) const noexcept {
    std::size_t h = std::hash<unsigned>()(static_cast<unsigned>(k.kind));
    h = h * 1315423911u ^ std::hash<long long>()(k.agent);
    h = h * 1315423911u ^ std::hash<std::string_view>()(k.name);
    h = h * 1315423911u ^ std::hash<const void*>()(k.a);
    h = h * 1315423911u ^ std::hash<const void*>()(k.b);
    return h;
  }
};

std::mutex pool_mutex;
std::deque<Node>& pool() {
  static std::deque<Node> p;
  return p;
}
std::unordered_map<Key, const Node*, KeyHash>& index() {
  static std::unordered_map<Key, const Node*, KeyHash> m;
  return m;
}

std::string render(Kind kind, long long agent, const std::string& name,
                   const Node* a, const Node* b) {
  switch (kind) {
    case Kind::Top:
      return "T";
    case Kind::Prop:
      return name;
    case Kind::Not:
      return "~" + a->text;
    case Kind::And:
      return "(" + a->text + " & " + b->text + ")";
    case Kind::Box:
      return "[" + std::to_string(agent) + "]" + a->text;
    case Kind::Nabla:
      return "Kv" + std::to_string(agent) + "(" + a->text + ", " + name + ")";
  }
  return {};
}

const Node* intern(Kind kind, long long agent, std::string name,
                   const Node* a, const Node* b) {
  std::lock_guard<std::mutex> lock(pool_mutex);
  Key key{kind, agent, name, a, b};
  auto it = index().find(key);
  if (it != index().end()) return it->second;
  Node n;
  n.kind = kind;
  n.agent = agent;
  n.name = std::move(name);
  n.a = a;
  n.b = b;
  n.text = render(kind, agent, n.name, a, b);
  n.size = 1 + (a ? a->size : 0) + (b ? b->size : 0);
  int child_depth = std::max(a ? a->modal_depth : 0, b ? b->modal_depth : 0);
  n.modal_depth = child_depth + (kind == Kind::Box || kind == Kind::Nabla ? 1 : 0);
  pool().push_back(std::move(n));
  const Node* stored = &pool().back();
  index().emplace(Key{stored->kind, stored->agent, stored->name, a, b}, stored);
  return stored;
}

bool ident_tail_ok(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

}  // namespace
}  // namespace detail

Kind Formula::kind() const noexcept { return node_->kind; }

const std::string& Formula::prop_name() const {
  assert(node_->kind == Kind::Prop);
  return node_->name;
}

long long Formula::agent() const {
  assert(node_->kind == Kind::Box || node_->kind == Kind::Nabla);
  return node_->agent;
}

const std::string& Formula::value_name() const {
  assert(node_->kind == Kind::Nabla);
  return node_->name;
}

Formula Formula::child() const {
  assert(node_->kind == Kind::Not || node_->kind == Kind::Box ||
         node_->kind == Kind::Nabla);
  return Formula(node_->a);
}

Formula Formula::left() const {
  assert(node_->kind == Kind::And);
  return Formula(node_->a);
}

Formula Formula::right() const {
  assert(node_->kind == Kind::And);
  return Formula(node_->b);
}

const std::string& Formula::str() const noexcept { return node_->text; }
int Formula::size() const noexcept { return node_->size; }
int Formula::modal_depth() const noexcept { return node_->modal_depth; }

bool Formula::operator<(const Formula& o) const noexcept {
  return node_ != o.node_ && node_->text < o.node_->text;
}

Formula top() { return Formula(detail::intern(Kind::Top, 0, {}, nullptr, nullptr)); }

Formula prop(std::string_view name) {
  if (name.empty()) throw std::invalid_argument("empty proposition name");
  if (!std::islower(static_cast<unsigned char>(name[0])) || name[0] == 'd' ||
      !detail::ident_tail_ok(name.substr(1)))
    throw std::invalid_argument("bad proposition name: " + std::string(name));
  return Formula(detail::intern(Kind::Prop, 0, std::string(name), nullptr, nullptr));
}

Formula neg(Formula f) {
  return Formula(detail::intern(Kind::Not, 0, {}, f.raw(), nullptr));
}

Formula conj(Formula a, Formula b) {
  return Formula(detail::intern(Kind::And, 0, {}, a.raw(), b.raw()));
}

Formula box(long long agent, Formula f) {
  if (agent <= 0) throw std::invalid_argument("agent id must be positive");
  return Formula(detail::intern(Kind::Box, agent, {}, f.raw(), nullptr));
}

Formula nabla(long long agent, Formula f, std::string_view value) {
  if (agent <= 0) throw std::invalid_argument("agent id must be positive");
  if (value.empty()) throw std::invalid_argument("empty value name");
  if (value[0] != 'd' || !detail::ident_tail_ok(value.substr(1)))
    throw std::invalid_argument("bad value name: " + std::string(value));
  return Formula(detail::intern(Kind::Nabla, agent, std::string(value), f.raw(), nullptr));
}

Formula bottom() { return neg(top()); }
Formula disj(Formula a, Formula b) { return neg(conj(neg(a), neg(b))); }
Formula implies(Formula a, Formula b) { return neg(conj(a, neg(b))); }
Formula diamond(long long agent, Formula f) { return neg(box(agent, neg(f))); }
Formula iff(Formula a, Formula b) { return conj(implies(a, b), implies(b, a)); }

// ---------------------------------------------------------------------------
// Parser: recursive descent over
//   impl := or ("->" impl)?          right-associative
//   or   := and ("|" and)*           left-associative
//   and  := unary ("&" unary)*       left-associative
//   unary := "~" unary | "[" nat "]" unary | "<" nat ">" unary | atom
//   atom := "T" | "F" | prop | "Kv" nat "(" impl "," vname ")" | "(" impl ")"

namespace {

class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula run() {
    Formula f = parse_impl();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at offset " + std::to_string(pos_), pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool eat(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!eat(c)) fail(std::string("expected '") + c + "' " + what);
  }

  long long parse_agent() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (pos_ == start) fail("expected agent number");
    long long v = 0;
    for (std::size_t i = start; i < pos_; ++i) {
      v = v * 10 + (text_[i] - '0');
      if (v > (1LL << 62)) {
        pos_ = start;
        fail("agent id out of range");
      }
    }
    if (v == 0) {
      pos_ = start;
      fail("agent id must be positive");
    }
    return v;
  }

  std::string parse_ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  Formula parse_impl() {
    Formula lhs = parse_or();
    skip_ws();
    if (pos_ + 1 < text_.size() && text_[pos_] == '-' && text_[pos_ + 1] == '>') {
      pos_ += 2;
      return implies(lhs, parse_impl());
    }
    return lhs;
  }

  Formula parse_or() {
    Formula f = parse_and();
    while (peek() == '|') {
      ++pos_;
      f = disj(f, parse_and());
    }
    return f;
  }

  Formula parse_and() {
    Formula f = parse_unary();
    while (peek() == '&') {
      ++pos_;
      f = conj(f, parse_unary());
    }
    return f;
  }

  Formula parse_unary() {
    char c = peek();
    if (c == '~') {
      ++pos_;
      return neg(parse_unary());
    }
    if (c == '[') {
      ++pos_;
      long long agent = parse_agent();
      expect(']', "after agent");
      return box(agent, parse_unary());
    }
    if (c == '<') {
      ++pos_;
      long long agent = parse_agent();
      expect('>', "after agent");
      return diamond(agent, parse_unary());
    }
    return parse_atom();
  }

  Formula parse_atom() {
    char c = peek();
    if (c == '(') {
      ++pos_;
      Formula f = parse_impl();
      expect(')', "to close group");
      return f;
    }
    if (c == 'T') {
      ++pos_;
      return top();
    }
    if (c == 'F') {
      ++pos_;
      return bottom();
    }
    if (c == 'K') {
      if (pos_ + 1 >= text_.size() || text_[pos_ + 1] != 'v')
        fail("expected 'Kv'");
      pos_ += 2;
      long long agent = parse_agent();
      expect('(', "after Kv agent");
      Formula body = parse_impl();
      expect(',', "between Kv body and value name");
      skip_ws();
      std::size_t name_pos = pos_;
      std::string vname = parse_ident();
      if (vname[0] != 'd') {
        pos_ = name_pos;
        fail("value name must start with 'd'");
      }
      expect(')', "to close Kv");
      return nabla(agent, body, vname);
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      std::size_t name_pos = pos_;
      std::string name = parse_ident();
      if (name[0] == 'd') {
        pos_ = name_pos;
        fail("proposition name may not start with 'd'");
      }
      return prop(name);
    }
    fail("expected formula");
  }
};

}  // namespace

Formula parse(std::string_view text) { return Parser(text).run(); }

// ---------------------------------------------------------------------------
// FormulaSet

FormulaSet::FormulaSet(std::initializer_list<Formula> fs) {
  for (Formula f : fs) insert(f);
}

bool FormulaSet::insert(Formula f) {
  auto it = std::lower_bound(items_.begin(), items_.end(), f);
  if (it != items_.end() && *it == f) return false;
  items_.insert(it, f);
  return true;
}

void FormulaSet::insert_all(const FormulaSet& other) {
  for (Formula f : other) insert(f);
}

bool FormulaSet::contains(Formula f) const {
  auto it = std::lower_bound(items_.begin(), items_.end(), f);
  return it != items_.end() && *it == f;
}

FormulaSet FormulaSet::with(Formula f) const {
  FormulaSet out = *this;
  out.insert(f);
  return out;
}

bool FormulaSet::operator<(const FormulaSet& o) const noexcept {
  return std::lexicographical_compare(items_.begin(), items_.end(),
                                      o.items_.begin(), o.items_.end());
}

std::string FormulaSet::str() const {
  std::string out = "{";
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (i) out += ", ";
    out += items_[i].str();
  }
  out += "}";
  return out;
}

// ---------------------------------------------------------------------------
// Closure operators

namespace {
void collect_sub(Formula f, FormulaSet& out) {
  if (!out.insert(f)) return;
  switch (f.kind()) {
    case Kind::Top:
    case Kind::Prop:
      break;
    case Kind::Not:
    case Kind::Box:
    case Kind::Nabla:
      collect_sub(f.child(), out);
      break;
    case Kind::And:
      collect_sub(f.left(), out);
      collect_sub(f.right(), out);
      break;
  }
}
}  // namespace

FormulaSet subformulas(Formula f) {
  FormulaSet out;
  collect_sub(f, out);
  return out;
}

FormulaSet subformulas(const FormulaSet& xs) {
  FormulaSet out;
  for (Formula f : xs) collect_sub(f, out);
  return out;
}

FormulaSet sub_plus(Formula f) {
  FormulaSet subs = subformulas(f);
  FormulaSet out = subs;
  for (Formula s : subs) out.insert(neg(s));
  return out;
}

FormulaSet sub_plus(const FormulaSet& xs) {
  FormulaSet subs = subformulas(xs);
  FormulaSet out = subs;
  for (Formula s : subs) out.insert(neg(s));
  return out;
}

std::set<std::string> value_names(Formula f) {
  std::set<std::string> out;
  for (Formula s : subformulas(f))
    if (s.kind() == Kind::Nabla) out.insert(s.value_name());
  return out;
}

std::set<std::string> value_names(const FormulaSet& xs) {
  std::set<std::string> out;
  for (Formula f : xs) {
    auto names = value_names(f);
    out.insert(names.begin(), names.end());
  }
  return out;
}

FormulaSet negate_all(const FormulaSet& xs) {
  FormulaSet out;
  for (Formula f : xs) out.insert(neg(f));
  return out;
}

FormulaSet unbox(const FormulaSet& xs, long long agent) {
  FormulaSet out;
  for (Formula f : xs)
    if (f.kind() == Kind::Box && f.agent() == agent) out.insert(f.child());
  return out;
}

}  // namespace kvl
