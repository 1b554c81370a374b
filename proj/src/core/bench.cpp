#include "core/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "core/rng.hpp"
#include "core/validate.hpp"
#include "json.hpp"

namespace ssched {

namespace {

constexpr int kRedrawLimit = 100;  // per job, before generation gives up

std::string fmt(double v, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

Instance gen_instance(const GenSpec& spec) {
  if (spec.n_jobs < 1 || spec.n_bases < 1 || spec.n_labs < 1) {
    throw InputError("gen_instance: jobs, bases, and labs counts must all be >= 1");
  }
  if (!(spec.area_size > 0.0)) throw InputError("gen_instance: area_size must be positive");
  if (spec.transporters_per_base < 1) {
    throw InputError("gen_instance: transporters_per_base must be >= 1");
  }
  if (spec.storage_margin < 0) throw InputError("gen_instance: storage_margin must be >= 0");
  if (!(spec.speed > 0.0) || !(spec.energy_rate > 0.0) || !(spec.delta_t > 0.0)) {
    throw InputError("gen_instance: speed, energy_rate, and delta_t must be positive");
  }
  if (spec.e_max < 0.0) throw InputError("gen_instance: e_max must be >= 0 (0 = automatic)");

  Rng rng(spec.seed);
  auto draw = [&] { return Location{rng.uniform(0.0, spec.area_size), rng.uniform(0.0, spec.area_size)}; };

  Instance inst;
  inst.stages = {{0, StageKind::BaseDispatch, false},
                 {1, StageKind::Job, false},
                 {2, StageKind::Machine, false},
                 {3, StageKind::BaseReceive, false}};
  for (int b = 0; b < spec.n_bases; ++b) {
    Facility base;
    base.id = "b" + std::to_string(b);
    base.location = draw();
    base.processing_time = spec.base_pt;
    base.initial_transporters = spec.transporters_per_base;
    base.storage_capacity = spec.transporters_per_base + spec.storage_margin;
    inst.bases.push_back(std::move(base));
  }
  for (int l = 0; l < spec.n_labs; ++l) {
    Facility lab;
    lab.id = "lab" + std::to_string(l);
    lab.stage = 2;
    lab.location = draw();
    lab.processing_time = spec.lab_pt;
    lab.capacity = spec.lab_capacity;
    lab.attached = false;  // the lab holds the sample; the transporter is free
    inst.machines.push_back(std::move(lab));
  }
  for (int j = 0; j < spec.n_jobs; ++j) {
    Job job;
    job.id = "j" + std::to_string(j);
    job.location = draw();
    job.processing_time = spec.job_pt;
    inst.jobs.push_back(std::move(job));
  }
  inst.transporter = {spec.e_max, spec.speed, spec.energy_rate};
  inst.weights = spec.weights;
  inst.delta_t = spec.delta_t;

  // Cheapest possible trip for a pickup point: nearest dispatch base, then
  // the lab minimizing leg plus its own cheapest return. A route exists iff
  // this value is strictly under the trip budget.
  std::vector<double> lab_return(inst.machines.size());
  for (std::size_t l = 0; l < inst.machines.size(); ++l) {
    double best = std::numeric_limits<double>::infinity();
    for (const Facility& base : inst.bases) {
      best = std::min(best, distance(inst.machines[l].location, base.location));
    }
    lab_return[l] = best;
  }
  auto min_trip_energy = [&](Location at) {
    double out = std::numeric_limits<double>::infinity();
    for (const Facility& base : inst.bases) out = std::min(out, distance(base.location, at));
    double via = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < inst.machines.size(); ++l) {
      via = std::min(via, distance(at, inst.machines[l].location) + lab_return[l]);
    }
    return (out + via) * spec.energy_rate;
  };

  if (spec.e_max == 0.0) {
    // Size the budget at the 95th percentile of the drawn jobs' cheapest
    // trips; outliers re-draw below instead of inflating every battery. The
    // 1.2 headroom leaves typical jobs more than one viable dispatch base,
    // which keeps the fleet circulating instead of pinning every job to a
    // single drained base.
    std::vector<double> cheapest(inst.jobs.size());
    for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
      cheapest[j] = min_trip_energy(inst.jobs[j].location);
    }
    std::sort(cheapest.begin(), cheapest.end());
    const std::size_t q =
        (static_cast<std::size_t>(inst.jobs.size()) * 95 + 99) / 100;  // ceil(0.95 n)
    inst.transporter.e_max = cheapest[q - 1] * 1.2;
  }

  // Re-draw pickup points whose cheapest trip exceeds the budget. Bounded:
  // a budget leaving (almost) no reachable ground fails loudly.
  for (Job& job : inst.jobs) {
    int tries = 0;
    while (!(min_trip_energy(job.location) < inst.transporter.e_max)) {
      if (++tries > kRedrawLimit) {
        throw InfeasibleError("gen_instance: no feasible location for '" + job.id + "' after " +
                              std::to_string(kRedrawLimit) + " draws; e_max " +
                              fmt(inst.transporter.e_max) +
                              " is too small for this layout, try a larger value");
      }
      job.location = draw();
    }
  }

  inst.finalize();
  return inst;
}

GenSpec bench_shape_defaults() {
  GenSpec shape;
  shape.n_jobs = 100;
  shape.n_bases = 10;
  shape.n_labs = 10;
  return shape;
}

OptimizerConfig bench_opt_defaults() {
  OptimizerConfig cfg;
  cfg.n_select = 5;
  cfg.n_clusters = 0;  // elbow rule
  cfg.tau_h = 120;
  cfg.gamma = 1.0;
  cfg.p_max = 3;
  cfg.dispatch_stride = 4;
  cfg.max_stall_retries = 8;
  return cfg;
}

namespace {

struct Task {
  std::uint64_t seed = 0;
  int n_jobs = 0;
  int n_select = 0;
};

BenchRow run_one(const std::string& name, const BenchConfig& base, const Task& task) {
  GenSpec gs = base.shape;
  gs.n_jobs = task.n_jobs;
  gs.seed = task.seed;
  Instance inst = gen_instance(gs);

  OptimizerConfig cfg = base.opt;
  cfg.n_select = task.n_select;
  cfg.rng_seed = task.seed;

  BenchRow row;
  row.experiment = name;
  row.seed = task.seed;
  row.n_jobs = gs.n_jobs;
  row.n_bases = gs.n_bases;
  row.n_labs = gs.n_labs;
  row.area_size = gs.area_size;
  row.n_select = cfg.n_select;
  row.n_clusters = cfg.n_clusters;
  row.tau_h = cfg.tau_h;
  row.gamma = cfg.gamma;
  row.dispatch_stride = cfg.dispatch_stride;
  row.p_max = cfg.p_max;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    Schedule sched = run(inst, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    row.objective = sched.total_cost;
    row.makespan = sched.makespan;
    row.n_accepted = sched.accepted.size();
    for (const Candidate& c : sched.accepted) {
      if (c.is_relocation()) ++row.n_relocations;
    }
    Report rep = validate(inst, sched);
    row.validator =
        rep.feasible() ? "ok" : "violations=" + std::to_string(rep.violations.size());
  } catch (const InfeasibleError&) {
    row.validator = "unschedulable";
  }
  return row;
}

std::vector<BenchRow> run_grid(const std::string& name, const BenchConfig& base,
                               const std::vector<Task>& tasks) {
  std::vector<BenchRow> rows(tasks.size());
  const int threads = std::min<int>(std::max(1, base.threads), static_cast<int>(tasks.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) rows[i] = run_one(name, base, tasks[i]);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    try {
      for (std::size_t i = next++; i < tasks.size(); i = next++) {
        rows[i] = run_one(name, base, tasks[i]);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

double x_of(const ExperimentResult& result, const BenchRow& row) {
  return result.x_label == "n_jobs" ? row.n_jobs : row.n_select;
}

LineFit fit_line(const std::vector<std::pair<double, double>>& pts) {
  LineFit f;
  const double n = static_cast<double>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den != 0.0) {
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
  } else {
    f.intercept = n > 0 ? sy / n : 0.0;
  }
  double ss_res = 0, ss_tot = 0;
  for (auto [x, y] : pts) {
    const double e = y - (f.slope * x + f.intercept);
    ss_res += e * e;
    const double d = y - sy / n;
    ss_tot += d * d;
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

}  // namespace

std::vector<std::pair<double, double>> grid_means(const ExperimentResult& result,
                                                  double BenchRow::* field) {
  std::map<double, std::pair<double, int>> acc;  // x -> (sum, count)
  for (const BenchRow& row : result.rows) {
    auto& slot = acc[x_of(result, row)];
    slot.first += row.*field;
    slot.second += 1;
  }
  std::vector<std::pair<double, double>> means;
  means.reserve(acc.size());
  for (const auto& [x, slot] : acc) means.emplace_back(x, slot.first / slot.second);
  return means;
}

std::vector<std::pair<double, double>> grid_wall_means(const ExperimentResult& result) {
  return grid_means(result, &BenchRow::wall_ms);
}

std::vector<std::pair<double, double>> grid_objective_means(const ExperimentResult& result) {
  return grid_means(result, &BenchRow::objective);
}

ExperimentResult experiment_runtime_vs_jobs(const std::vector<std::uint64_t>& seeds,
                                            const std::vector<int>& job_counts, int n_select,
                                            const BenchConfig& base) {
  ExperimentResult result;
  result.name = "runtime_vs_jobs";
  result.x_label = "n_jobs";
  std::vector<Task> tasks;
  for (int jobs : job_counts) {
    for (std::uint64_t seed : seeds) tasks.push_back({seed, jobs, n_select});
  }
  result.rows = run_grid(result.name, base, tasks);
  result.fit = fit_line(grid_wall_means(result));
  result.has_fit = true;
  return result;
}

ExperimentResult experiment_cost_vs_ns(const std::vector<std::uint64_t>& seeds,
                                       const std::vector<int>& ns_values, int n_jobs,
                                       const BenchConfig& base) {
  ExperimentResult result;
  result.name = "cost_vs_ns";
  result.x_label = "n_select";
  std::vector<Task> tasks;
  for (int ns : ns_values) {
    for (std::uint64_t seed : seeds) tasks.push_back({seed, n_jobs, ns});
  }
  result.rows = run_grid(result.name, base, tasks);
  return result;
}

ExperimentResult experiment_runtime_vs_ns(const std::vector<std::uint64_t>& seeds,
                                          const std::vector<int>& ns_values, int n_jobs,
                                          const BenchConfig& base) {
  ExperimentResult result = experiment_cost_vs_ns(seeds, ns_values, n_jobs, base);
  result.name = "runtime_vs_ns";
  return result;
}

std::string to_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os << "experiment,seed,n_jobs,n_bases,n_labs,area_size,n_select,n_clusters,tau_h,gamma,"
        "dispatch_stride,p_max,objective,makespan,n_accepted,n_relocations,wall_ms,validator\n";
  for (const BenchRow& r : result.rows) {
    os << r.experiment << ',' << r.seed << ',' << r.n_jobs << ',' << r.n_bases << ',' << r.n_labs
       << ',' << fmt(r.area_size) << ',' << r.n_select << ',' << r.n_clusters << ',' << r.tau_h
       << ',' << fmt(r.gamma) << ',' << r.dispatch_stride << ',' << r.p_max << ','
       << fmt(r.objective) << ',' << r.makespan << ',' << r.n_accepted << ',' << r.n_relocations
       << ',' << fmt(r.wall_ms, "%.3f") << ',' << r.validator << '\n';
  }
  return os.str();
}

std::string plot_svg(const ExperimentResult& result, const std::string& y_label,
                     bool plot_objective) {
  const double width = 640, height = 420;
  const double ml = 80, mr = 24, mt = 36, mb = 56;

  auto field = plot_objective ? &BenchRow::objective : &BenchRow::wall_ms;
  const auto means = grid_means(result, field);

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_hi = 0.0;
  for (const BenchRow& r : result.rows) {
    const double x = x_of(result, r);
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
    y_hi = std::max(y_hi, r.*field);
  }
  if (result.rows.empty()) {
    x_lo = 0;
    x_hi = 1;
  }
  if (x_hi == x_lo) {
    x_lo -= 1;
    x_hi += 1;
  }
  if (y_hi <= 0.0) y_hi = 1.0;
  y_hi *= 1.05;

  auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * (width - ml - mr); };
  auto py = [&](double y) { return height - mb - y / y_hi * (height - mt - mb); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
     << result.name << "</text>\n";

  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
     << height - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
     << "\" text-anchor=\"middle\" font-size=\"13\">" << result.x_label << "</text>\n";
  os << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
     << (mt + height - mb) / 2 << ")\">" << y_label << "</text>\n";

  for (const auto& [x, unused] : means) {
    (void)unused;
    os << "<line x1=\"" << px(x) << "\" y1=\"" << height - mb << "\" x2=\"" << px(x) << "\" y2=\""
       << height - mb + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px(x) << "\" y=\"" << height - mb + 20
       << "\" text-anchor=\"middle\" font-size=\"12\">" << fmt(x, "%g") << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double y = y_hi * t / 4.0;
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(y) << "\" x2=\"" << ml << "\" y2=\"" << py(y)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml - 9 << "\" y=\"" << py(y) + 4
       << "\" text-anchor=\"end\" font-size=\"12\">" << fmt(y, "%.4g") << "</text>\n";
  }

  for (const BenchRow& r : result.rows) {
    os << "<circle cx=\"" << px(x_of(result, r)) << "\" cy=\"" << py(r.*field)
       << "\" r=\"3\" fill=\"#9aa7b1\" fill-opacity=\"0.7\"/>\n";
  }
  if (!means.empty()) {
    os << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : means) os << px(x) << ',' << py(y) << ' ';
    os << "\"/>\n";
    for (const auto& [x, y] : means) {
      os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"4\" fill=\"#1f6fb2\"/>\n";
    }
  }
  if (result.has_fit) {
    os << "<text x=\"" << width - mr << "\" y=\"" << mt + 4
       << "\" text-anchor=\"end\" font-size=\"12\">fit: " << fmt(result.fit.slope, "%.4g")
       << "x + " << fmt(result.fit.intercept, "%.4g") << ", r2 = " << fmt(result.fit.r2, "%.4f")
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_experiment_files(const ExperimentResult& result, const BenchConfig& base,
                            const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto emit = [&](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw InputError("cannot write " + (fs::path(dir) / name).string());
    out << text;
  };

  const bool objective_plot = result.name == "cost_vs_ns";
  emit(result.name + ".csv", to_csv(result));
  emit(result.name + ".svg",
       plot_svg(result, objective_plot ? "objective" : "wall time (ms)", objective_plot));

  nlohmann::ordered_json m;
  m["format_version"] = 1;
  m["experiment"] = result.name;
  m["x_label"] = result.x_label;
  m["csv"] = result.name + ".csv";
  m["plot"] = result.name + ".svg";
  m["rows"] = result.rows.size();
  std::vector<std::uint64_t> seeds;
  std::vector<double> grid;
  for (const BenchRow& r : result.rows) {
    if (std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end()) seeds.push_back(r.seed);
    const double x = x_of(result, r);
    if (std::find(grid.begin(), grid.end(), x) == grid.end()) grid.push_back(x);
  }
  m["seeds"] = seeds;
  m["grid"] = grid;
  m["shape"] = {{"n_bases", base.shape.n_bases},
                {"n_labs", base.shape.n_labs},
                {"area_size", base.shape.area_size},
                {"transporters_per_base", base.shape.transporters_per_base},
                {"storage_margin", base.shape.storage_margin},
                {"base_pt", base.shape.base_pt},
                {"lab_pt", base.shape.lab_pt},
                {"lab_capacity", base.shape.lab_capacity},
                {"job_pt", base.shape.job_pt},
                {"speed", base.shape.speed},
                {"energy_rate", base.shape.energy_rate},
                {"delta_t", base.shape.delta_t},
                {"e_max", base.shape.e_max}};
  m["optimizer"] = {{"n_clusters", base.opt.n_clusters},
                    {"tau_h", base.opt.tau_h},
                    {"gamma", base.opt.gamma},
                    {"p_min", base.opt.p_min},
                    {"p_max", base.opt.p_max},
                    {"dispatch_stride", base.opt.dispatch_stride},
                    {"max_stall_retries", base.opt.max_stall_retries}};
  if (result.has_fit) {
    m["fit"] = {{"slope", result.fit.slope},
                {"intercept", result.fit.intercept},
                {"r2", result.fit.r2}};
  } else {
    m["fit"] = nullptr;
  }
  emit(result.name + ".manifest.json", m.dump(2) + "\n");
}

}  // namespace ssched
