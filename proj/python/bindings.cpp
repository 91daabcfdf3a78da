#include <pybind11/pybind11.h>

#include "kvlogic/formula.hpp"
#include "kvlogic/proofs.hpp"
#include "kvlogic/semantics.hpp"
#include "kvlogic/tableau.hpp"

namespace py = pybind11;
using namespace kvl;

PYBIND11_MODULE(_kvlogic, m) {
  m.doc() =
      "Tableau satisfiability, model checking and proof checking for "
      "multi-agent modal logic K with a knowing-what operator";

  py::class_<Formula>(m, "Formula")
      .def("__str__", [](const Formula& f) { return f.str(); })
      .def("__repr__",
           [](const Formula& f) { return "Formula('" + f.str() + "')"; })
      .def("__eq__", [](const Formula& a, const Formula& b) { return a == b; })
      .def("__hash__",
           [](const Formula& f) { return std::hash<const void*>()(f.raw()); })
      .def_property_readonly("size", &Formula::size)
      .def_property_readonly("modal_depth", &Formula::modal_depth);

  m.def(
      "parse", [](const std::string& text) { return parse(text); },
      py::arg("text"), "Parse a formula into its normalized form.");

  m.def(
      "decide",
      [](const std::string& text, bool model) {
        Verdict v = decide(parse(text), model);
        py::dict stats;
        stats["nodes_visited"] = v.stats.nodes_visited;
        stats["states_enumerated"] = v.stats.states_enumerated;
        stats["max_depth"] = v.stats.max_depth;
        stats["max_unlabeled_chain"] = v.stats.max_unlabeled_chain;
        py::dict out;
        out["satisfiable"] = v.satisfiable;
        out["model"] = v.model ? py::object(py::str(to_json(*v.model))) : py::none();
        out["stats"] = stats;
        return out;
      },
      py::arg("formula"), py::arg("model") = false,
      "Tableau satisfiability; optionally extracts a witness model as JSON.");

  m.def(
      "check_model",
      [](const std::string& model_json, const std::string& world,
         const std::string& formula) {
        return eval(model_from_json(model_json), world, parse(formula));
      },
      py::arg("model_json"), py::arg("world"), py::arg("formula"),
      "Evaluate a formula at a world of a JSON model.");

  m.def(
      "oracle_sat",
      [](const std::string& formula, int max_worlds, int max_values) -> py::object {
        auto found = oracle_sat(parse(formula), max_worlds, max_values);
        return found ? py::object(py::str(to_json(*found))) : py::none();
      },
      py::arg("formula"), py::arg("max_worlds") = 3, py::arg("max_values") = 2,
      "Brute-force search for a small model; None means exhausted.");

  m.def(
      "verify_proof",
      [](const std::string& text) {
        VerifyResult r = verify(parse_proof(text));
        py::dict out;
        out["ok"] = r.ok;
        out["line"] = r.line;
        out["reason"] = r.reason;
        return out;
      },
      py::arg("text"), "Check a derivation in the proof file format.");

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ModelError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ProofParseError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const std::invalid_argument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });
}
