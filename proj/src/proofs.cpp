#include "kvlogic/proofs.hpp"

#include <algorithm>
#include <optional>
#include <sstream>
#include <utility>

namespace kvl {

namespace {

// f = ~(a & ~b) destructures to a -> b.
std::optional<std::pair<Formula, Formula>> match_implies(Formula f) {
  if (f.kind() != Kind::Not || f.child().kind() != Kind::And ||
      f.child().right().kind() != Kind::Not)
    return std::nullopt;
  return std::make_pair(f.child().left(), f.child().right().child());
}

// f = ~[i]~a destructures to <i>a.
std::optional<std::pair<long long, Formula>> match_diamond(Formula f) {
  if (f.kind() != Kind::Not || f.child().kind() != Kind::Box ||
      f.child().child().kind() != Kind::Not)
    return std::nullopt;
  return std::make_pair(f.child().agent(), f.child().child().child());
}

// f = (a -> b) & (b -> a) destructures to a <-> b.
std::optional<std::pair<Formula, Formula>> match_iff(Formula f) {
  if (f.kind() != Kind::And) return std::nullopt;
  auto fwd = match_implies(f.left());
  auto bwd = match_implies(f.right());
  if (!fwd || !bwd) return std::nullopt;
  if (fwd->first != bwd->second || fwd->second != bwd->first) return std::nullopt;
  return fwd;
}

bool match_ax_k(Formula f) {
  auto outer = match_implies(f);
  if (!outer) return false;
  auto [premise, rest] = *outer;
  if (premise.kind() != Kind::Box) return false;
  auto body = match_implies(premise.child());
  if (!body) return false;
  auto inner = match_implies(rest);
  if (!inner) return false;
  auto [bx, by] = *inner;
  if (bx.kind() != Kind::Box || by.kind() != Kind::Box) return false;
  long long agent = premise.agent();
  return bx.agent() == agent && by.agent() == agent &&
         bx.child() == body->first && by.child() == body->second;
}

bool match_ax_distnsv(Formula f) {
  auto outer = match_implies(f);
  if (!outer) return false;
  auto [premise, rest] = *outer;
  if (premise.kind() != Kind::Box) return false;
  auto body = match_implies(premise.child());
  if (!body) return false;
  auto inner = match_implies(rest);
  if (!inner) return false;
  auto [from, to] = *inner;
  if (from.kind() != Kind::Nabla || to.kind() != Kind::Nabla) return false;
  long long agent = premise.agent();
  return from.agent() == agent && to.agent() == agent &&
         from.value_name() == to.value_name() && from.child() == body->second &&
         to.child() == body->first;
}

bool match_ax_nsvbot(Formula f) {
  return f.kind() == Kind::Nabla && f.child() == bottom();
}

bool match_ax_nsvor(Formula f) {
  auto outer = match_implies(f);
  if (!outer) return false;
  auto [lhs, rhs] = *outer;
  if (lhs.kind() != Kind::And || lhs.left().kind() != Kind::And) return false;
  Formula dia_part = lhs.left().left();
  Formula first_kv = lhs.left().right();
  Formula second_kv = lhs.right();
  auto dia = match_diamond(dia_part);
  if (!dia || dia->second.kind() != Kind::And) return false;
  Formula a = dia->second.left();
  Formula b = dia->second.right();
  long long agent = dia->first;
  if (first_kv.kind() != Kind::Nabla || second_kv.kind() != Kind::Nabla ||
      rhs.kind() != Kind::Nabla)
    return false;
  const std::string& vname = rhs.value_name();
  return first_kv.agent() == agent && second_kv.agent() == agent &&
         rhs.agent() == agent && first_kv.value_name() == vname &&
         second_kv.value_name() == vname && first_kv.child() == a &&
         second_kv.child() == b && rhs.child() == disj(a, b);
}

// Whether v is obtainable from u by replacing occurrences of `from` with
// `to`: .first allows zero replacements, .second requires at least one.
std::pair<bool, bool> rewrites(Formula u, Formula v, Formula from, Formula to) {
  bool zero = u == v;
  bool positive = u == from && v == to;
  if (u.kind() == v.kind()) {
    switch (u.kind()) {
      case Kind::Top:
      case Kind::Prop:
        break;
      case Kind::Not:
        positive = positive || rewrites(u.child(), v.child(), from, to).second;
        break;
      case Kind::Box:
        if (u.agent() == v.agent())
          positive = positive || rewrites(u.child(), v.child(), from, to).second;
        break;
      case Kind::Nabla:
        if (u.agent() == v.agent() && u.value_name() == v.value_name())
          positive = positive || rewrites(u.child(), v.child(), from, to).second;
        break;
      case Kind::And: {
        auto l = rewrites(u.left(), v.left(), from, to);
        auto r = rewrites(u.right(), v.right(), from, to);
        bool l_ok = l.first || l.second;
        bool r_ok = r.first || r.second;
        positive = positive || (l_ok && r_ok && (l.second || r.second));
        break;
      }
    }
  }
  return {zero, positive};
}

// Propositional tautology over the modal skeleton: maximal [i]/Kv
// subformulas and proposition letters become atoms.
void collect_atoms(Formula f, std::vector<Formula>& atoms) {
  switch (f.kind()) {
    case Kind::Top:
      return;
    case Kind::Prop:
    case Kind::Box:
    case Kind::Nabla:
      if (std::find(atoms.begin(), atoms.end(), f) == atoms.end()) atoms.push_back(f);
      return;
    case Kind::Not:
      collect_atoms(f.child(), atoms);
      return;
    case Kind::And:
      collect_atoms(f.left(), atoms);
      collect_atoms(f.right(), atoms);
      return;
  }
}

bool eval_skeleton(Formula f, const std::vector<Formula>& atoms, std::uint32_t mask) {
  switch (f.kind()) {
    case Kind::Top:
      return true;
    case Kind::Not:
      return !eval_skeleton(f.child(), atoms, mask);
    case Kind::And:
      return eval_skeleton(f.left(), atoms, mask) &&
             eval_skeleton(f.right(), atoms, mask);
    default: {
      auto it = std::find(atoms.begin(), atoms.end(), f);
      return (mask >> (it - atoms.begin())) & 1u;
    }
  }
}

bool is_tautology(Formula f, std::string& why) {
  std::vector<Formula> atoms;
  collect_atoms(f, atoms);
  if (atoms.size() > 20) {
    why = "tautology check exceeds the atom limit";
    return false;
  }
  for (std::uint32_t mask = 0; mask < (1u << atoms.size()); ++mask)
    if (!eval_skeleton(f, atoms, mask)) {
      why = "not a propositional tautology";
      return false;
    }
  return true;
}

}  // namespace

VerifyResult verify(const std::vector<ProofLine>& proof) {
  auto fail = [](int line, std::string reason) {
    return VerifyResult{false, line, std::move(reason)};
  };
  for (std::size_t k = 0; k < proof.size(); ++k) {
    const ProofLine& ln = proof[k];
    int expected = static_cast<int>(k) + 1;
    if (ln.index != expected)
      return fail(expected, "line numbers must run 1..n without gaps");

    auto backref = [&](int r) { return r >= 1 && r < ln.index; };

    switch (ln.rule) {
      case ProofLine::Rule::Taut: {
        std::string why;
        if (!is_tautology(ln.formula, why)) return fail(ln.index, why);
        break;
      }
      case ProofLine::Rule::AxK:
        if (!match_ax_k(ln.formula)) return fail(ln.index, "not an instance of K");
        break;
      case ProofLine::Rule::DistNsv:
        if (!match_ax_distnsv(ln.formula))
          return fail(ln.index, "not an instance of DISTNSV");
        break;
      case ProofLine::Rule::NsvBot:
        if (!match_ax_nsvbot(ln.formula))
          return fail(ln.index, "not an instance of NSVBOT");
        break;
      case ProofLine::Rule::NsvOr:
        if (!match_ax_nsvor(ln.formula))
          return fail(ln.index, "not an instance of NSVOR");
        break;
      case ProofLine::Rule::MP: {
        if (!backref(ln.ref1) || !backref(ln.ref2))
          return fail(ln.index, "MP references must point backward");
        Formula antecedent = proof[ln.ref1 - 1].formula;
        Formula implication = proof[ln.ref2 - 1].formula;
        if (implication != implies(antecedent, ln.formula))
          return fail(ln.index, "MP premises do not yield this line");
        break;
      }
      case ProofLine::Rule::Nec: {
        if (!backref(ln.ref1))
          return fail(ln.index, "NEC reference must point backward");
        if (ln.agent <= 0) return fail(ln.index, "NEC needs a positive agent");
        if (ln.formula != box(ln.agent, proof[ln.ref1 - 1].formula))
          return fail(ln.index, "NEC premise does not yield this line");
        break;
      }
      case ProofLine::Rule::RE: {
        if (!backref(ln.ref1))
          return fail(ln.index, "RE reference must point backward");
        auto premise = match_iff(proof[ln.ref1 - 1].formula);
        if (!premise)
          return fail(ln.index, "RE premise is not a biconditional");
        auto conclusion = match_iff(ln.formula);
        if (!conclusion)
          return fail(ln.index, "RE conclusion is not a biconditional");
        auto [from, to] = *premise;
        auto [lhs, rhs] = *conclusion;
        if (!rewrites(lhs, rhs, from, to).second)
          return fail(ln.index, "RE conclusion is not a replacement instance");
        break;
      }
    }
  }
  return VerifyResult{true, 0, ""};
}

// ---------------------------------------------------------------------------
// Proof file parsing

namespace {

std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(s.front())) s.erase(s.begin());
  while (!s.empty() && issp(s.back())) s.pop_back();
  return s;
}

int parse_ref(const std::string& tok, int line_no) {
  try {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ProofParseError("bad line reference '" + tok + "'", line_no);
  }
}

}  // namespace

std::vector<ProofLine> parse_proof(std::string_view text) {
  std::vector<ProofLine> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;

    std::size_t dot = line.find('.');
    if (dot == std::string::npos)
      throw ProofParseError("missing '.' after the step number", line_no);
    int index = 0;
    try {
      std::size_t used = 0;
      index = std::stoi(line.substr(0, dot), &used);
      if (used != trim(line.substr(0, dot)).size() || index <= 0)
        throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ProofParseError("bad step number", line_no);
    }

    std::size_t semi = line.find(';', dot + 1);
    if (semi == std::string::npos)
      throw ProofParseError("missing ';' before the rule", line_no);

    Formula formula = [&] {
      try {
        return parse(line.substr(dot + 1, semi - dot - 1));
      } catch (const ParseError& e) {
        throw ProofParseError(std::string("bad formula: ") + e.what(), line_no);
      }
    }();

    std::istringstream rule_in(line.substr(semi + 1));
    std::string name;
    rule_in >> name;
    std::vector<std::string> args;
    for (std::string tok; rule_in >> tok;) args.push_back(tok);

    ProofLine::Rule rule;
    int ref1 = 0, ref2 = 0;
    long long agent = 0;
    if (name == "TAUT" && args.empty()) {
      rule = ProofLine::Rule::Taut;
    } else if (name == "K" && args.empty()) {
      rule = ProofLine::Rule::AxK;
    } else if (name == "DISTNSV" && args.empty()) {
      rule = ProofLine::Rule::DistNsv;
    } else if (name == "NSVBOT" && args.empty()) {
      rule = ProofLine::Rule::NsvBot;
    } else if (name == "NSVOR" && args.empty()) {
      rule = ProofLine::Rule::NsvOr;
    } else if (name == "MP" && args.size() == 2) {
      rule = ProofLine::Rule::MP;
      ref1 = parse_ref(args[0], line_no);
      ref2 = parse_ref(args[1], line_no);
    } else if (name == "NEC" && args.size() == 2 && args[1].starts_with("agent=")) {
      rule = ProofLine::Rule::Nec;
      ref1 = parse_ref(args[0], line_no);
      agent = parse_ref(args[1].substr(6), line_no);
    } else if (name == "RE" && args.size() == 1) {
      rule = ProofLine::Rule::RE;
      ref1 = parse_ref(args[0], line_no);
    } else {
      throw ProofParseError("unrecognized rule '" + name + "'", line_no);
    }

    out.push_back(ProofLine{index, formula, rule, ref1, ref2, agent});
  }
  return out;
}

}  // namespace kvl
