#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "kvlogic/formula.hpp"
#include "kvlogic/gen.hpp"
#include "kvlogic/proofs.hpp"
#include "kvlogic/semantics.hpp"
#include "kvlogic/tableau.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

int run_sat(const std::string& text, const std::string& model_path, bool trace) {
  kvl::Formula f = kvl::parse(text);
  kvl::TraceSink sink;
  if (trace) sink = [](const std::string& line) { std::cerr << line << "\n"; };
  kvl::Verdict v = kvl::decide(f, !model_path.empty(), sink);
  std::cout << (v.satisfiable ? "SAT" : "UNSAT") << "\n";
  if (v.satisfiable && !model_path.empty()) write_file(model_path, kvl::to_json(*v.model));
  return v.satisfiable ? 0 : 1;
}

int run_check(const std::string& model_path, const std::string& world,
              const std::string& text) {
  kvl::Model m = kvl::model_from_json(read_file(model_path));
  kvl::Formula f = kvl::parse(text);
  bool holds = kvl::eval(m, world, f);
  std::cout << (holds ? "true" : "false") << "\n";
  return holds ? 0 : 1;
}

int run_prove(const std::string& proof_path) {
  auto proof = kvl::parse_proof(read_file(proof_path));
  kvl::VerifyResult r = kvl::verify(proof);
  if (r.ok) {
    std::cout << "verified\n";
    return 0;
  }
  std::cout << "line " << r.line << ": " << r.reason << "\n";
  return 1;
}

int run_oracle(const std::string& text, int max_worlds, int max_values,
               const std::string& model_path) {
  kvl::Formula f = kvl::parse(text);
  auto m = kvl::oracle_sat(f, max_worlds, max_values);
  if (!m) {
    std::cout << "EXHAUSTED\n";
    return 1;
  }
  std::cout << "SAT\n";
  if (!model_path.empty()) write_file(model_path, kvl::to_json(*m));
  return 0;
}

int run_fuzz(std::uint64_t seed, int count, int size) {
  std::mt19937_64 rng(seed);
  int ok = 0;
  for (int i = 0; i < count; ++i) {
    kvl::Formula f = kvl::random_formula(rng, size);
    std::string failure;

    kvl::Verdict v = kvl::decide(f, true);
    if (v.satisfiable) {
      if (!v.model || !kvl::eval(*v.model, v.model->root, f))
        failure = "extracted model does not satisfy the formula";
    }
    if (failure.empty()) {
      auto m = kvl::oracle_sat(f, 3, 2);
      if (m && !v.satisfiable) failure = "oracle found a model but the tableau said UNSAT";
    }
    if (failure.empty()) {
      int n = f.size();
      if (v.stats.max_depth > 2 * n * n) failure = "tree depth exceeds the bound";
      if (v.stats.max_unlabeled_chain > 2 * n + 1)
        failure = "unlabeled chain exceeds the bound";
    }

    if (failure.empty())
      ++ok;
    else
      std::cerr << "FAIL [" << i << "] " << f.str() << ": " << failure << "\n";
  }
  std::cout << ok << "/" << count << " ok\n";
  return ok == count ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Satisfiability, model checking, countermodel search, and proof\n"
      "checking for multi-agent modal logic K with a knowing-what operator."};
  app.require_subcommand(1);

  std::string formula_text, model_path, world, proof_path;
  bool trace = false;
  int max_worlds = 3, max_values = 2;
  std::uint64_t seed = 1;
  int count = 100, size = 6;

  auto* sat = app.add_subcommand("sat", "Decide satisfiability of a formula");
  sat->add_option("formula", formula_text, "formula to decide")->required();
  sat->add_option("--model", model_path, "write a witness model here when SAT");
  sat->add_flag("--trace", trace, "per-node search trace on stderr");

  auto* check = app.add_subcommand("check", "Evaluate a formula in a model file");
  check->add_option("model", model_path, "model file (JSON)")->required();
  check->add_option("world", world, "world id to evaluate at")->required();
  check->add_option("formula", formula_text, "formula to evaluate")->required();

  auto* prove = app.add_subcommand("prove", "Verify a derivation file");
  prove->add_option("proof", proof_path, "proof file")->required();

  auto* oracle = app.add_subcommand("oracle", "Brute-force model search");
  oracle->add_option("formula", formula_text, "formula to search a model for")->required();
  oracle->add_option("--max-worlds", max_worlds, "world bound")->check(CLI::PositiveNumber);
  oracle->add_option("--max-values", max_values, "token bound")->check(CLI::PositiveNumber);
  oracle->add_option("--model", model_path, "write the found model here");

  auto* fuzz = app.add_subcommand("fuzz", "Random self-check run");
  fuzz->add_option("--seed", seed, "generator seed");
  fuzz->add_option("--count", count, "number of formulas")->check(CLI::PositiveNumber);
  fuzz->add_option("--size", size, "node-count bound")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sat->parsed()) return run_sat(formula_text, model_path, trace);
    if (check->parsed()) return run_check(model_path, world, formula_text);
    if (prove->parsed()) return run_prove(proof_path);
    if (oracle->parsed()) return run_oracle(formula_text, max_worlds, max_values, model_path);
    if (fuzz->parsed()) return run_fuzz(seed, count, size);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
