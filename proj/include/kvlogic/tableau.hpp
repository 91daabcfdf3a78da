#ifndef KVLOGIC_TABLEAU_HPP
#define KVLOGIC_TABLEAU_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "kvlogic/formula.hpp"
#include "kvlogic/semantics.hpp"

namespace kvl {

// Extra information attached to a fully expanded label set to make it a
// state. For every (agent, value name) with a positive Kv guard the guard
// set splits into `never` (guards true at no successor) and `cells`
// (guards grouped by the successor value they share). The empty cell is
// always available: it stands for a fresh value no guard is tied to.
struct StateInfo {
  struct Partition {
    FormulaSet never;                // guards realized at no successor
    std::vector<FormulaSet> cells;   // sorted; cells[0] is the empty cell
    bool operator==(const Partition&) const = default;
  };

  // (agent, value name) -> partition of that guard set
  std::map<std::pair<long long, std::string>, Partition> partitions;
  // (agent, f) for each ~[agent]f member: chosen cell per value name
  std::map<std::pair<long long, Formula>, std::map<std::string, FormulaSet>> box_cells;
  // (agent, f, d0) for each ~Kv_agent(f, d0) member: the two witness choices
  std::map<std::tuple<long long, Formula, std::string>,
           std::map<std::string, FormulaSet>>
      nabla_cells_a, nabla_cells_b;

  bool operator==(const StateInfo&) const = default;
  std::string str() const;  // canonical serialization, for tests and tracing
};

bool is_blatantly_inconsistent(const FormulaSet& x);

// The three decomposition clauses plus freedom from direct contradiction.
bool is_propositional_tableau(const FormulaSet& x);

// Every subformula of a member occurs positively or negatively.
bool is_fully_expanded(const FormulaSet& x);

// Successor label sets for the canonically least member violating a
// decomposition clause. Throws std::logic_error if no clause is violated
// or the set is blatantly inconsistent.
std::vector<FormulaSet> expand_propositional(const FormulaSet& x);

// Both polarities of the canonically least member of `closure` undetermined
// in x. Throws std::logic_error if everything is determined.
std::vector<FormulaSet> expand_full(const FormulaSet& x, const FormulaSet& closure);

// Deterministic on-demand enumeration of every StateInfo that makes the
// label set a state. Holds one candidate at a time; the stream order is
// fixed (partition choices advance last-key-first, then witness choices).
class StateStream {
public:
  explicit StateStream(const FormulaSet& label);
  StateStream(StateStream&&) = default;
  StateStream& operator=(StateStream&&) = default;

  std::optional<StateInfo> next();

private:
  struct GuardKey {
    long long agent;
    std::string vname;
    std::vector<Formula> guards;
    // cursor: membership mask for `never`, growth string for the cells
    std::uint64_t never_mask = 0;
    std::vector<int> growth;
    StateInfo::Partition current;

    void rebuild();
    bool advance();  // false when wrapped back to the first choice
  };

  FormulaSet label_;
  std::vector<GuardKey> keys_;
  std::vector<std::pair<long long, Formula>> neg_boxes_;
  std::vector<std::tuple<long long, Formula, std::string>> neg_nablas_;
  std::map<long long, std::vector<std::string>> agent_vnames_;

  // Flat odometer over cell choices; limits depend on the current partitions.
  struct Digit {
    int limit;
    int value;
  };
  std::vector<Digit> digits_;
  bool started_ = false;
  bool done_ = false;

  const std::vector<FormulaSet>& cells_for(long long agent, const std::string& vname) const;
  void reset_digits();
  StateInfo materialize() const;
};

struct LabeledSuccessor {
  long long agent;
  FormulaSet label;
  std::map<std::string, ValueToken> constraints;
};

// One successor per ~[i]f member, two per ~Kv_i(f,d0) member, in canonical
// member order. Throws std::logic_error if (x, s) is not a state.
std::vector<LabeledSuccessor> labeled_successors(const FormulaSet& x, const StateInfo& s);

struct TableauStats {
  long long nodes_visited = 0;
  long long states_enumerated = 0;
  int max_depth = 0;            // tree depth in edges
  int max_unlabeled_chain = 0;  // nodes in the longest run of unlabeled edges

  bool operator==(const TableauStats&) const = default;
};

struct Verdict {
  bool satisfiable = false;
  std::optional<Model> model;
  TableauStats stats;
};

using TraceSink = std::function<void(const std::string&)>;

// Full decision procedure: depth-first over the tableau tree with an
// explicit stack, children regenerated on demand. When want_model is set
// and the formula is satisfiable, re-descends into satisfiable branches and
// assembles the witness model.
Verdict decide(Formula f, bool want_model = false, const TraceSink& trace = {});

// Same procedure over plain formula sets instead of the indexed labels the
// main engine uses. Slower; kept as an independent route for cross-checking
// and as the fallback for inputs whose closure outgrows the index.
Verdict decide_reference(Formula f, bool want_model = false,
                         const TraceSink& trace = {});

}  // namespace kvl

#endif
