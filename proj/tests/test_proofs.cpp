#include <doctest.h>

#include <fstream>
#include <sstream>

#include "kvlogic/proofs.hpp"
#include "kvlogic/tableau.hpp"
#include "support.hpp"

using namespace kvl;

namespace {

std::string data_file(const char* name) {
  std::ifstream in(std::string(KVLOGIC_TEST_DATA) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ProofLine line(int index, const char* text, ProofLine::Rule rule, int ref1 = 0,
               int ref2 = 0, long long agent = 0) {
  return ProofLine{index, parse(text), rule, ref1, ref2, agent};
}

}  // namespace

TEST_CASE("single-line verdicts") {
  CHECK(verify({line(1, "p -> p", ProofLine::Rule::Taut)}).ok);
  CHECK(verify({line(1, "Kv1(F, d)", ProofLine::Rule::NsvBot)}).ok);

  VerifyResult r = verify({line(1, "p", ProofLine::Rule::Taut)});
  CHECK(!r.ok);
  CHECK(r.line == 1);
  CHECK(r.reason == "not a propositional tautology");
}

TEST_CASE("tautologies see modal subformulas as atoms") {
  CHECK(verify({line(1, "[1]p | ~[1]p", ProofLine::Rule::Taut)}).ok);
  CHECK(verify({line(1, "Kv2(p, d) -> Kv2(p, d)", ProofLine::Rule::Taut)}).ok);
  // distinct boxes are distinct atoms, so this is not a tautology
  CHECK(!verify({line(1, "[1]p | ~[2]p", ProofLine::Rule::Taut)}).ok);
  CHECK(!verify({line(1, "[1](p | ~p)", ProofLine::Rule::Taut)}).ok);
}

TEST_CASE("axiom schema matching") {
  CHECK(verify({line(1, "[2](p -> q) -> ([2]p -> [2]q)", ProofLine::Rule::AxK)}).ok);
  CHECK(!verify({line(1, "[2](p -> q) -> ([1]p -> [2]q)", ProofLine::Rule::AxK)}).ok);
  CHECK(verify({line(1, "[1](p -> q) -> (Kv1(q, d) -> Kv1(p, d))",
                     ProofLine::Rule::DistNsv)})
            .ok);
  CHECK(!verify({line(1, "[1](p -> q) -> (Kv1(p, d) -> Kv1(q, d))",
                      ProofLine::Rule::DistNsv)})
             .ok);
  CHECK(verify({line(1, "(<1>(p & q) & Kv1(p, d) & Kv1(q, d)) -> Kv1(p | q, d)",
                     ProofLine::Rule::NsvOr)})
            .ok);
  CHECK(!verify({line(1, "(<1>(p & q) & Kv1(p, d) & Kv1(q, d2)) -> Kv1(p | q, d)",
                      ProofLine::Rule::NsvOr)})
             .ok);
  CHECK(!verify({line(1, "Kv1(T, d)", ProofLine::Rule::NsvBot)}).ok);
}

TEST_CASE("schema matching is substitution closed") {
  std::mt19937_64 rng(808);
  for (int i = 0; i < 50; ++i) {
    CHECK(verify({{1, kvtest::instance_k(rng), ProofLine::Rule::AxK, 0, 0, 0}}).ok);
    CHECK(verify({{1, kvtest::instance_distnsv(rng), ProofLine::Rule::DistNsv, 0, 0, 0}})
              .ok);
    CHECK(verify({{1, kvtest::instance_nsvbot(rng), ProofLine::Rule::NsvBot, 0, 0, 0}})
              .ok);
    CHECK(
        verify({{1, kvtest::instance_nsvor(rng), ProofLine::Rule::NsvOr, 0, 0, 0}}).ok);
  }
}

TEST_CASE("modus ponens and necessitation check their premises") {
  std::vector<ProofLine> proof = {
      line(1, "p -> (q -> p)", ProofLine::Rule::Taut),
  };
  // well-formed continuation
  proof.push_back(line(2, "(p -> (q -> p)) -> ((p -> (q -> p)) | r)",
                       ProofLine::Rule::Taut));
  proof.push_back(line(3, "(p -> (q -> p)) | r", ProofLine::Rule::MP, 1, 2));
  proof.push_back(line(4, "[3]((p -> (q -> p)) | r)", ProofLine::Rule::Nec, 3, 0, 3));
  CHECK(verify(proof).ok);

  auto broken = proof;
  broken[2] = line(3, "(p -> (q -> p)) | r", ProofLine::Rule::MP, 2, 1);
  VerifyResult r = verify(broken);
  CHECK(!r.ok);
  CHECK(r.line == 3);

  broken = proof;
  broken[3] = line(4, "[3]((p -> (q -> p)) | r)", ProofLine::Rule::Nec, 3, 0, 2);
  r = verify(broken);
  CHECK(!r.ok);
  CHECK(r.line == 4);

  broken = proof;
  broken[2].ref2 = 3;  // forward reference
  r = verify(broken);
  CHECK(!r.ok);
  CHECK(r.line == 3);
}

TEST_CASE("line numbering must be sequential") {
  std::vector<ProofLine> proof = {line(1, "p -> p", ProofLine::Rule::Taut),
                                  line(3, "q -> q", ProofLine::Rule::Taut)};
  VerifyResult r = verify(proof);
  CHECK(!r.ok);
  CHECK(r.line == 2);
}

TEST_CASE("replacement of equivalents") {
  // premise p <-> ~~p, conclusion rewrites inside a box
  std::vector<ProofLine> proof = {
      line(1, "(p -> ~~p) & (~~p -> p)", ProofLine::Rule::Taut),
      line(2, "([1](p & q) -> [1](~~p & q)) & ([1](~~p & q) -> [1](p & q))",
           ProofLine::Rule::RE, 1),
  };
  CHECK(verify(proof).ok);

  // replacing only one of two occurrences is allowed
  std::vector<ProofLine> partial = {
      line(1, "(p -> ~~p) & (~~p -> p)", ProofLine::Rule::Taut),
      line(2, "((p & p) -> (p & ~~p)) & ((p & ~~p) -> (p & p))", ProofLine::Rule::RE,
           1),
  };
  CHECK(verify(partial).ok);

  // no occurrence replaced: rejected
  std::vector<ProofLine> none = {
      line(1, "(q -> ~~q) & (~~q -> q)", ProofLine::Rule::Taut),
      line(2, "(p -> p) & (p -> p)", ProofLine::Rule::RE, 1),
  };
  VerifyResult r = verify(none);
  CHECK(!r.ok);
  CHECK(r.line == 2);

  // premise that is not a biconditional: rejected
  std::vector<ProofLine> bad = {
      line(1, "p -> p", ProofLine::Rule::Taut),
      line(2, "(p -> p) & (p -> p)", ProofLine::Rule::RE, 1),
  };
  r = verify(bad);
  CHECK(!r.ok);
  CHECK(r.line == 2);
}

TEST_CASE("proof files parse and verify") {
  auto proof = parse_proof(data_file("nsv_transitivity.proof"));
  REQUIRE(proof.size() == 17);
  VerifyResult r = verify(proof);
  CHECK(r.ok);

  // the proved formula is valid: its negation has no model
  CHECK(!decide(neg(proof.back().formula)).satisfiable);
}

TEST_CASE("accepted conclusions are valid") {
  // every line of a verified proof is a theorem, so its negation is UNSAT
  auto proof = parse_proof(data_file("nsv_transitivity.proof"));
  REQUIRE(verify(proof).ok);
  for (const auto& ln : proof) CHECK(!decide(neg(ln.formula)).satisfiable);
}

TEST_CASE("proof parser rejects malformed input") {
  CHECK_THROWS_AS(parse_proof("1 p -> p ; TAUT"), ProofParseError);
  CHECK_THROWS_AS(parse_proof("1. p -> p TAUT"), ProofParseError);
  CHECK_THROWS_AS(parse_proof("1. p &&& ; TAUT"), ProofParseError);
  CHECK_THROWS_AS(parse_proof("1. p -> p ; BOGUS"), ProofParseError);
  CHECK_THROWS_AS(parse_proof("1. p -> p ; MP one two"), ProofParseError);
  CHECK_THROWS_AS(parse_proof("1. p ; NEC 1 agent=0"), ProofParseError);
  try {
    parse_proof("1. p -> p ; TAUT\n\n# fine\n5. q ; BOGUS");
  } catch (const ProofParseError& e) {
    CHECK(e.line == 4);
  }

  auto ok = parse_proof("# comment\n\n1. p -> p ; TAUT\n");
  CHECK(ok.size() == 1);
}
