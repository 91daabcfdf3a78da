#include <doctest.h>

#include "kvlogic/semantics.hpp"
#include "support.hpp"

using namespace kvl;

namespace {

Model single_world() {
  Model m;
  m.worlds = {"w"};
  m.root = "w";
  return m;
}

}  // namespace

TEST_CASE("eval on a world without successors") {
  Model m = single_world();
  CHECK(eval(m, "w", box(1, neg(top()))));    // vacuous box
  CHECK(eval(m, "w", nabla(1, top(), "d")));  // no successor pair exists
  CHECK(!eval(m, "w", prop("p")));
  CHECK(eval(m, "w", neg(prop("p"))));
  CHECK_THROWS_AS(eval(m, "nowhere", top()), ModelError);
}

TEST_CASE("nabla fails on disagreeing successors") {
  Model m;
  m.worlds = {"w", "t1", "t2"};
  m.root = "w";
  m.relations[1] = {{"w", "t1"}, {"w", "t2"}};
  m.valuation["t1"].insert("p");
  m.valuation["t2"].insert("p");
  m.values["t1"]["d"] = ValueToken::bullet();
  m.values["t2"]["d"] = ValueToken::circ();
  CHECK(!eval(m, "w", nabla(1, prop("p"), "d")));
  // one side stops satisfying the guard: agreement is vacuous again
  m.valuation["t2"].erase("p");
  CHECK(eval(m, "w", nabla(1, prop("p"), "d")));
}

TEST_CASE("missing value entries read as default zero") {
  Model m;
  m.worlds = {"w", "t1", "t2"};
  m.root = "w";
  m.relations[2] = {{"w", "t1"}, {"w", "t2"}};
  CHECK(eval(m, "w", nabla(2, top(), "d")));  // both default:0
  m.values["t2"]["d"] = ValueToken::def(1);
  CHECK(!eval(m, "w", nabla(2, top(), "d")));
}

TEST_CASE("oracle finds nothing for a contradiction") {
  CHECK(!oracle_sat(conj(prop("p"), neg(prop("p"))), 3, 2));
  CHECK(!oracle_sat(parse("F"), 4, 3));
}

TEST_CASE("oracle finds a disagreeing pair for ~Kv1(T, d)") {
  Formula f = neg(nabla(1, top(), "d"));
  auto m = oracle_sat(f, 3, 2);
  REQUIRE(m.has_value());
  CHECK(eval(*m, m->root, f));
  // the hit must exhibit two 1-successors of the root with distinct d values
  std::vector<ValueToken> seen;
  for (auto& [s, t] : m->relations.at(1))
    if (s == m->root) seen.push_back(m->value_of("d", t));
  bool distinct = false;
  for (auto& a : seen)
    for (auto& b : seen)
      if (!(a == b)) distinct = true;
  CHECK(distinct);
}

TEST_CASE("oracle finds the mixed guard example") {
  Formula f = conj(conj(nabla(1, prop("p"), "d"), neg(box(1, neg(prop("p"))))),
                   neg(box(1, prop("p"))));
  auto m = oracle_sat(f, 3, 2);
  REQUIRE(m.has_value());
  CHECK(eval(*m, m->root, f));
}

TEST_CASE("oracle hits satisfy their formula") {
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 120; ++i) {
    Formula f = random_formula(rng, 1 + kvtest::pick(rng, 5));
    if (auto m = oracle_sat(f, 3, 2)) CHECK(eval(*m, m->root, f));
  }
}

TEST_CASE("oracle enumeration is deterministic") {
  Formula f = parse("~Kv1(T, d) & (p | q)");
  auto a = oracle_sat(f, 3, 2);
  auto b = oracle_sat(f, 3, 2);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(to_json(*a) == to_json(*b));
}

TEST_CASE("diamond means some successor") {
  std::mt19937_64 rng(515);
  for (int i = 0; i < 150; ++i) {
    Model m = kvtest::random_model(rng);
    Formula a = random_formula(rng, 3);
    bool via_eval = eval(m, "w0", diamond(1, a));
    bool direct = false;
    if (m.relations.count(1))
      for (auto& [s, t] : m.relations.at(1))
        if (s == "w0" && eval(m, t, a)) direct = true;
    CHECK(via_eval == direct);
  }
}

TEST_CASE("semantic validity of the two Kv axioms") {
  std::mt19937_64 rng(616);
  for (int i = 0; i < 200; ++i) {
    Model m = kvtest::random_model(rng);
    Formula a = random_formula(rng, 3), b = random_formula(rng, 3);
    CHECK(eval(m, "w0", nabla(1, neg(top()), "d1")));
    if (eval(m, "w0", box(1, implies(a, b))) && eval(m, "w0", nabla(1, b, "d1")))
      CHECK(eval(m, "w0", nabla(1, a, "d1")));
  }
}

TEST_CASE("value tokens compare structurally") {
  CHECK(ValueToken::bullet() == ValueToken::bullet());
  CHECK(!(ValueToken::bullet() == ValueToken::circ()));
  CHECK(!(ValueToken::def(0) == ValueToken::def(1)));
  CHECK(!(ValueToken::cell(FormulaSet{}) == ValueToken::bullet()));
  CHECK(ValueToken::cell(FormulaSet{prop("p")}) ==
        ValueToken::cell(FormulaSet{prop("p")}));

  for (const char* text : {"bullet", "circ", "default:3", "cell:{}", "cell:{p;q}"})
    CHECK(ValueToken::from_string(text).str() == text);
  CHECK_THROWS_AS(ValueToken::from_string("nonsense"), ModelError);
}

TEST_CASE("model files round trip") {
  Formula f = neg(nabla(1, top(), "d"));
  auto m = oracle_sat(f, 3, 2);
  REQUIRE(m.has_value());
  std::string text = to_json(*m);
  Model back = model_from_json(text);
  CHECK(to_json(back) == text);
  CHECK(eval(back, back.root, f));

  CHECK_THROWS_AS(model_from_json("{"), ModelError);
  CHECK_THROWS_AS(model_from_json(R"({"worlds":["a"],"root":"b"})"), ModelError);
  CHECK_THROWS_AS(
      model_from_json(R"({"worlds":["a"],"root":"a","relations":{"0":[["a","a"]]}})"),
      ModelError);
}
