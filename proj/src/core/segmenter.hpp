#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/bip.hpp"
#include "core/candidates.hpp"
#include "core/instance.hpp"

namespace ssched {

// Rolling-horizon driver settings. Each segment optimizes the window
//   [max(makespan - gamma*tau_h, 0), makespan + tau_h]
// over a diverse subset of unassigned jobs; a stalled segment (nothing
// fits) retries with the window end extended by tau_h.
struct OptimizerConfig {
  int n_select = 5;      // jobs per segment
  int n_clusters = 0;    // 0 picks k by the elbow rule (capped at 10)
  Tick tau_h = 40;       // window growth per segment, >= 1
  double gamma = 1.0;    // overlap fraction into the past, in [0, 1]
  int p_min = 1;         // warn when a job yields fewer routes
  int p_max = 1 << 20;   // route cap per job
  int dispatch_stride = 1;
  int max_stall_retries = 3;
  std::uint64_t rng_seed = 0;
};

// One optimization attempt. Stall retries repeat a segment number with a
// larger attempt index and a longer window.
struct SegmentStats {
  int segment = 0;
  int attempt = 0;
  TimeWindow window{};
  std::vector<std::string> selected_jobs;
  std::size_t n_candidates = 0;
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;  // segment program value; includes fixed candidates
  int n_assigned = 0;
  int n_relocations = 0;
  std::size_t first_accepted = 0;  // index into Schedule::accepted
  double solve_ms = 0.0;           // wall clock; never serialized
};

struct Schedule {
  std::vector<Candidate> accepted;     // var_id == position, stable for fixing
  std::vector<double> accepted_costs;  // objective coefficient per accepted
  Tick makespan = 0;
  double total_cost = 0.0;  // sum of accepted_costs
  std::vector<SegmentStats> segments;
  std::vector<std::string> warnings;
};

// Observation points for logging and tests; both optional.
struct RunHooks {
  std::function<void(const SegmentStats&)> on_segment;
  std::function<void(const std::string&)> on_warning;
};

// A job that can never be scheduled: no energy-feasible route at all, or
// the window stopped producing assignments after every retry.
struct UnschedulableError : InfeasibleError {
  std::vector<std::string> job_ids;
  UnschedulableError(const std::string& what, std::vector<std::string> ids);
};

Schedule run(const Instance& instance, const OptimizerConfig& config,
             const RunHooks* hooks = nullptr);

// One line-delimited JSON record per segment attempt. Wall time lives only
// here: schedule files must stay byte-identical across reruns.
std::string run_log_line(const SegmentStats& stats);

// Schedules serialize without wall-clock fields. Loading needs the instance
// to rebuild route nodes from facility ids.
std::string schedule_to_json(const Schedule& schedule);
Schedule schedule_from_json(const std::string& text, const Instance& instance);
void save_schedule(const Schedule& schedule, const std::string& path);
Schedule load_schedule(const std::string& path, const Instance& instance);

}  // namespace ssched
