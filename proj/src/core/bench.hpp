#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/instance.hpp"
#include "core/segmenter.hpp"

namespace ssched {

// Random-instance knobs. Bases, labs, and pickup points land uniformly in
// the [0, area_size]^2 square; the stage layout is the four-stage pipeline
// dispatch -> pickup -> lab -> receive. Every count is >= 1.
struct GenSpec {
  int n_jobs = 20;
  int n_bases = 3;
  int n_labs = 3;
  double area_size = 2000.0;
  std::uint64_t seed = 1;

  int transporters_per_base = 1;
  int storage_margin = 2;  // storage capacity = transporters + margin
  int base_pt = 2;         // recharge ticks, applies before dispatch and after return
  int lab_pt = 6;
  int lab_capacity = 1;
  int job_pt = 1;  // pickup ticks, transporter waits
  double speed = 10.0;
  double energy_rate = 0.1;
  double delta_t = 5.0;
  Weights weights{1.0, 1.0, 1, 0.0};

  // 0 sizes the trip budget automatically: large enough that at least 95%
  // of the drawn pickup points have an energy-feasible route. Either way,
  // jobs outside the budget are re-drawn; a fixed budget that leaves (part
  // of) the square unreachable fails generation.
  double e_max = 0.0;
};

// Deterministic per spec. Throws InputError on bad counts and
// InfeasibleError when e_max cannot be satisfied by re-drawing.
Instance gen_instance(const GenSpec& spec);

// One engine run inside an experiment grid. CSV columns match the field
// order here; wall_ms covers the optimizer call only.
struct BenchRow {
  std::string experiment;
  std::uint64_t seed = 0;
  int n_jobs = 0;
  int n_bases = 0;
  int n_labs = 0;
  double area_size = 0.0;
  int n_select = 0;
  int n_clusters = 0;
  Tick tau_h = 0;
  double gamma = 1.0;
  int dispatch_stride = 1;
  int p_max = 0;
  double objective = 0.0;
  Tick makespan = 0;
  std::size_t n_accepted = 0;
  int n_relocations = 0;
  double wall_ms = 0.0;
  std::string validator;  // "ok", "violations=N", or "unschedulable"
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

struct ExperimentResult {
  std::string name;
  std::string x_label;              // which column the grid varies
  std::vector<BenchRow> rows;       // grid-major, seeds inner, fixed order
  bool has_fit = false;
  LineFit fit;  // least squares through the per-grid-point means of wall_ms
};

// Instance shape and optimizer settings the experiments default to. The
// shape mirrors the ten-transporter, ten-lab deployment the engine targets;
// the optimizer settings keep each segment's program at a size the exact
// solver handles in well under a second.
GenSpec bench_shape_defaults();
OptimizerConfig bench_opt_defaults();

struct BenchConfig {
  GenSpec shape = bench_shape_defaults();  // n_jobs and seed overridden per run
  OptimizerConfig opt = bench_opt_defaults();  // n_select and rng_seed overridden
  int threads = 1;  // runs are independent; row order does not depend on this
};

// Wall time against instance size at a fixed per-segment job count.
ExperimentResult experiment_runtime_vs_jobs(const std::vector<std::uint64_t>& seeds,
                                            const std::vector<int>& job_counts, int n_select = 5,
                                            const BenchConfig& base = {});

// Schedule cost against per-segment job count at a fixed instance size.
ExperimentResult experiment_cost_vs_ns(const std::vector<std::uint64_t>& seeds,
                                       const std::vector<int>& ns_values, int n_jobs,
                                       const BenchConfig& base = {});

// Wall time against per-segment job count at a fixed instance size.
ExperimentResult experiment_runtime_vs_ns(const std::vector<std::uint64_t>& seeds,
                                          const std::vector<int>& ns_values, int n_jobs,
                                          const BenchConfig& base = {});

// Grid means of one row field, in grid order; used by the plots and the
// trend checks.
std::vector<std::pair<double, double>> grid_means(const ExperimentResult& result,
                                                  double BenchRow::* field);
std::vector<std::pair<double, double>> grid_wall_means(const ExperimentResult& result);
std::vector<std::pair<double, double>> grid_objective_means(const ExperimentResult& result);

std::string to_csv(const ExperimentResult& result);

// Standalone line chart: raw rows as scatter, grid means as a polyline.
std::string plot_svg(const ExperimentResult& result, const std::string& y_label,
                     bool plot_objective = false);

// Writes <name>.csv, <name>.svg, <name>.manifest.json under dir (created if
// missing). The manifest captures the full config, seeds, grid, and fit.
void write_experiment_files(const ExperimentResult& result, const BenchConfig& base,
                            const std::string& dir);

}  // namespace ssched
