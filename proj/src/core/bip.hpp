#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/candidates.hpp"
#include "core/instance.hpp"

namespace ssched {

// Signed tally of candidate decision variables; coefficients are always +1
// (add) or -1 (subtract).
struct ConstraintContainer {
  std::vector<std::pair<int, int>> terms;  // (var_id, +1/-1)

  void add(int var) { terms.emplace_back(var, 1); }
  void sub(int var) { terms.emplace_back(var, -1); }
};

enum class Relation { Eq, Le, Ge };

struct Constraint {
  ConstraintContainer container;
  Relation rel = Relation::Eq;
  long long bound = 0;
  std::string tag;  // human-readable origin, for dumps and diagnostics
};

// 0-1 program for one segment. Variables are candidate decisions numbered
// 0..n_vars-1; `fixed` pins decisions carried over from earlier segments.
struct BinaryProgram {
  int n_vars = 0;
  std::vector<std::pair<int, int>> fixed;  // (var_id, 0/1)
  std::vector<Constraint> constraints;
  std::vector<double> objective;  // cost per var, index = var_id
};

enum class SolveStatus { Optimal, Infeasible, NoAssignment };

struct SolveResult {
  std::vector<int> assignment;  // 0/1 per var when Optimal
  double objective_value = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
};

// Objective coefficient of one candidate: alpha*E + beta*t_f^k for a job
// (plus zeta*(arrival at job - due)^2 when a due time exists), alpha*E alone
// for a relocation (it finishes no job).
double candidate_cost(const Candidate& candidate, const Weights& weights,
                      std::optional<Tick> due_time);

// Assembles the segment program over fixed_schedule (earlier segments'
// accepted candidates, re-pinned to 1) followed by this segment's candidates.
// Variable ids must be positional: fixed_schedule[i].var_id == i,
// candidates[i].var_id == |fixed_schedule| + i.
//
// Rows emitted:
//   - fixity:       one Eq-1 row per fixed candidate
//   - job-once:     per job id, sum of its candidates Eq 1 (relocations have
//                   no job and join no such row)
//   - machine load: per machine and busy interval start at or after
//                   window.start, actives <= capacity; a candidate occupies
//                   its machine for [arrival, arrival + pt] inclusive
//   - availability: per base and dispatch tick in the window (plus the
//                   window start), receipts ready minus dispatches so far
//                   >= -initial stock; a receipt is ready pt(base) after
//                   arrival
//   - storage:      per base and arrival tick at or after window.start (plus
//                   the window start), initial stock + arrivals - dispatches
//                   <= storage capacity; arrival ticks past window.end are
//                   kept so a late return can never overflow a base unseen
//
// Rows are materialized only at ticks where the tallied sum can peak (event
// ticks), which is equivalent to one row per tick.
BinaryProgram build_program(const std::vector<Candidate>& candidates,
                            const std::vector<Candidate>& fixed_schedule, TimeWindow window,
                            const Instance& instance);

// Exact minimization by depth-first branch and bound: rows are folded over
// decided variables and pruned by achievable-sum intervals (coefficients are
// +-1, so every integer in [min,max] is reachable); saturated rows force
// their remaining variables; Eq-1 all-positive variable-disjoint rows act as
// selection groups whose cheapest open members give an admissible lower
// bound. Branching picks the open group with the fewest undecided members
// (then its cheapest variable, 1 first) and falls back to the lowest
// undecided variable (0 first). Fully deterministic.
SolveResult solve(const BinaryProgram& program);

// Writes the program in LP text format (variables c<var_id>) for
// cross-checking with external tools.
std::string dump_lp(const BinaryProgram& program);

}  // namespace ssched
