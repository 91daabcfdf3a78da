#ifndef KVLOGIC_PROOFS_HPP
#define KVLOGIC_PROOFS_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kvlogic/formula.hpp"

namespace kvl {

// One derivation step. `ref1`/`ref2` are 1-based line numbers and must point
// strictly backward; `agent` is used by NEC only.
struct ProofLine {
  enum class Rule { Taut, AxK, DistNsv, NsvBot, NsvOr, MP, Nec, RE };

  int index;
  Formula formula;
  Rule rule;
  int ref1 = 0;  // MP antecedent / NEC premise / RE premise
  int ref2 = 0;  // MP implication
  long long agent = 0;
};

struct VerifyResult {
  bool ok = false;
  int line = 0;  // first failing line when !ok
  std::string reason;
};

// Checks every line: TAUT by truth table over the modal skeleton, axiom
// lines by structural schema match, MP/NEC/RE against the referenced lines.
VerifyResult verify(const std::vector<ProofLine>& proof);

struct ProofParseError : std::runtime_error {
  ProofParseError(const std::string& what, int line_arg)
      : std::runtime_error(what), line(line_arg) {}
  int line;  // 1-based input line
};

// Text format, one step per line, blank lines and '#' comments ignored:
//   <n>. <formula> ; <RULE> [<refs>]
// RULE is TAUT | K | DISTNSV | NSVBOT | NSVOR | MP <i> <j> | NEC <i> agent=<a> | RE <i>
std::vector<ProofLine> parse_proof(std::string_view text);

}  // namespace kvl

#endif
