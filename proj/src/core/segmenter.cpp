#include "core/segmenter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "core/cluster.hpp"
#include "core/pathfind.hpp"
#include "json.hpp"

namespace ssched {

namespace {

constexpr int kFormatVersion = 1;
constexpr int kAutoClusterCap = 10;

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const std::string& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NoAssignment: return "no_assignment";
  }
  return "unknown";
}

SolveStatus status_from_name(const std::string& s) {
  if (s == "optimal") return SolveStatus::Optimal;
  if (s == "infeasible") return SolveStatus::Infeasible;
  if (s == "no_assignment") return SolveStatus::NoAssignment;
  throw InputError("unknown solve status '" + s + "'");
}

void check_config(const OptimizerConfig& cfg) {
  if (cfg.n_select < 1) throw InputError("optimizer: n_select must be >= 1");
  if (cfg.n_clusters < 0) throw InputError("optimizer: n_clusters must be >= 0");
  if (cfg.tau_h < 1) throw InputError("optimizer: tau_h must be >= 1");
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) {
    throw InputError("optimizer: gamma must be in [0, 1]");
  }
  if (cfg.p_min < 1 || cfg.p_max < cfg.p_min) {
    throw InputError("optimizer: need 1 <= p_min <= p_max");
  }
  if (cfg.dispatch_stride < 1) throw InputError("optimizer: dispatch_stride must be >= 1");
  if (cfg.max_stall_retries < 0) throw InputError("optimizer: max_stall_retries must be >= 0");
}

}  // namespace

UnschedulableError::UnschedulableError(const std::string& what, std::vector<std::string> ids)
    : InfeasibleError(what + ": " + join_ids(ids)), job_ids(std::move(ids)) {}

Schedule run(const Instance& instance, const OptimizerConfig& cfg, const RunHooks* hooks) {
  check_config(cfg);

  Schedule out;
  if (instance.jobs.empty()) return out;

  auto warn = [&](std::string text) {
    if (hooks && hooks->on_warning) hooks->on_warning(text);
    out.warnings.push_back(std::move(text));
  };

  int k = cfg.n_clusters;
  if (k == 0) {
    k = suggest_n_clusters(instance.jobs,
                           std::min<int>(static_cast<int>(instance.jobs.size()), kAutoClusterCap));
  }
  ClusterState state = cluster_jobs(instance.jobs, k, cfg.rng_seed);

  // Routes depend only on the instance; compute once per job and reuse
  // across segments. Relocation routes are likewise static, but their
  // candidates are re-stamped for every window.
  std::map<std::string, std::vector<Path>, std::less<>> routes;
  const std::vector<Path> reloc_routes = relocation_paths(instance, instance.transporter.e_max);

  int segment = 0;
  int attempt = 0;
  const Tick lookback = static_cast<Tick>(std::llround(cfg.gamma * static_cast<double>(cfg.tau_h)));

  while (state.total_unassigned() > 0) {
    TimeWindow window{std::max<Tick>(out.makespan - lookback, 0),
                      out.makespan + cfg.tau_h * (1 + attempt)};
    const std::vector<std::string> selected = select(state, cfg.n_select);

    std::vector<Path> paths;
    std::vector<std::string> dead;
    for (const std::string& jid : selected) {
      auto it = routes.find(jid);
      if (it == routes.end()) {
        const Job& job = instance.jobs[instance.job_index(jid)];
        PathSearchResult found = find_disjoint_paths(build_job_graph(instance, job),
                                                     instance.transporter.e_max, cfg.p_min,
                                                     cfg.p_max);
        if (found.warning) warn(found.warning_text);
        it = routes.emplace(jid, std::move(found.paths)).first;
      }
      if (it->second.empty()) {
        dead.push_back(jid);
        continue;
      }
      paths.insert(paths.end(), it->second.begin(), it->second.end());
    }
    if (!dead.empty()) throw UnschedulableError("no energy-feasible route for job(s)", dead);
    paths.insert(paths.end(), reloc_routes.begin(), reloc_routes.end());

    std::vector<Candidate> cands = generate_candidates(paths, window, cfg.dispatch_stride,
                                                       static_cast<int>(out.accepted.size()));

    // A relocation recharged only after the window closes cannot enable any
    // dispatch this segment can still make; it adds cost and search width
    // for nothing, so the segment optimum is unchanged by dropping it.
    {
      int var = static_cast<int>(out.accepted.size());
      std::size_t kept = 0;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        if (cands[i].is_relocation() && cands[i].finish > window.end) continue;
        cands[i].var_id = var++;
        if (kept != i) cands[kept] = std::move(cands[i]);
        ++kept;
      }
      cands.resize(kept);
    }

    BinaryProgram program = build_program(cands, out.accepted, window, instance);

    const auto t0 = std::chrono::steady_clock::now();
    SolveResult res = solve(program);
    const auto t1 = std::chrono::steady_clock::now();

    SegmentStats st;
    st.segment = segment;
    st.attempt = attempt;
    st.window = window;
    st.selected_jobs = selected;
    st.n_candidates = cands.size();
    st.status = res.status;
    st.objective = res.objective_value;
    st.first_accepted = out.accepted.size();
    st.solve_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    if (res.status == SolveStatus::Optimal) {
      for (Candidate& c : cands) {
        if (!res.assignment[c.var_id]) continue;
        std::optional<Tick> due;
        if (c.is_relocation()) {
          ++st.n_relocations;
        } else {
          ++st.n_assigned;
          const Job& job = instance.jobs[instance.job_index(c.job_id)];
          due = job.due_time;
          state.mark_assigned(c.job_id);
        }
        out.makespan = std::max(out.makespan, c.times.back());
        const double cost = candidate_cost(c, instance.weights, due);
        c.var_id = static_cast<int>(out.accepted.size());
        out.accepted.push_back(std::move(c));
        out.accepted_costs.push_back(cost);
        out.total_cost += cost;
      }
      ++segment;
      attempt = 0;
    } else {
      warn("segment " + std::to_string(segment) +
           ": the time window is not long enough, extending its end");
      ++attempt;
    }

    if (hooks && hooks->on_segment) hooks->on_segment(st);
    out.segments.push_back(std::move(st));

    if (attempt > cfg.max_stall_retries) {
      std::vector<std::string> remaining = selected;
      throw UnschedulableError("optimization stalled after " +
                                   std::to_string(cfg.max_stall_retries) +
                                   " window extensions; unassigned job(s)",
                               remaining);
    }
  }

  return out;
}

std::string run_log_line(const SegmentStats& st) {
  nlohmann::ordered_json j;
  j["segment"] = st.segment;
  j["attempt"] = st.attempt;
  j["window"] = {st.window.start, st.window.end};
  j["jobs"] = st.selected_jobs;
  j["candidates"] = st.n_candidates;
  j["status"] = status_name(st.status);
  j["objective"] = st.objective;
  j["assigned"] = st.n_assigned;
  j["relocations"] = st.n_relocations;
  j["solve_ms"] = st.solve_ms;
  return j.dump();
}

std::string schedule_to_json(const Schedule& s) {
  nlohmann::ordered_json root;
  root["format_version"] = kFormatVersion;
  root["makespan"] = s.makespan;
  root["total_cost"] = s.total_cost;

  nlohmann::ordered_json accepted = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < s.accepted.size(); ++i) {
    const Candidate& c = s.accepted[i];
    nlohmann::ordered_json e;
    if (!c.is_relocation()) e["job"] = c.job_id;
    nlohmann::ordered_json route = nlohmann::ordered_json::array();
    for (const PathNode& n : c.path->sequence) route.push_back(n.id);
    e["route"] = std::move(route);
    e["times"] = c.times;
    e["energy"] = c.energy;
    e["finish"] = c.finish;
    e["cost"] = s.accepted_costs[i];
    accepted.push_back(std::move(e));
  }
  root["accepted"] = std::move(accepted);

  nlohmann::ordered_json segments = nlohmann::ordered_json::array();
  for (const SegmentStats& st : s.segments) {
    nlohmann::ordered_json e;
    e["segment"] = st.segment;
    e["attempt"] = st.attempt;
    e["window"] = {st.window.start, st.window.end};
    e["jobs"] = st.selected_jobs;
    e["candidates"] = st.n_candidates;
    e["status"] = status_name(st.status);
    e["objective"] = st.objective;
    e["assigned"] = st.n_assigned;
    e["relocations"] = st.n_relocations;
    e["first_accepted"] = st.first_accepted;
    segments.push_back(std::move(e));
  }
  root["segments"] = std::move(segments);
  root["warnings"] = s.warnings;
  return root.dump(2) + "\n";
}

namespace {

template <typename T>
const nlohmann::ordered_json& field(const T& j, const char* key, const char* ctx) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw InputError(std::string("missing field '") + key + "' in " + ctx);
  }
  return *it;
}

// Rebuild one route from facility ids. Node layout is positional: dispatch
// base, then (for jobs) the pickup and machine stops, then the receive base.
std::shared_ptr<const Path> route_from_ids(const std::vector<std::string>& ids,
                                           const std::string& job_id, const Instance& inst) {
  if (ids.size() < 2) throw InputError("schedule route needs at least two stops");
  Path p;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::string& id = ids[i];
    PathNode n;
    n.id = id;
    if (i == 0 || i + 1 == ids.size()) {
      n.kind = i == 0 ? StageKind::BaseDispatch : StageKind::BaseReceive;
      n.ref = inst.base_index(id);
      const Facility& b = inst.bases[n.ref];
      n.loc = b.location;
      n.pt = b.processing_time;
      n.attached = true;
    } else if (id == job_id) {
      n.kind = StageKind::Job;
      n.ref = inst.job_index(id);
      const Job& j = inst.jobs[n.ref];
      n.loc = j.location;
      n.pt = j.processing_time;
      n.attached = true;
    } else {
      n.kind = StageKind::Machine;
      n.ref = inst.machine_index(id);
      const Facility& m = inst.machines[n.ref];
      n.loc = m.location;
      n.pt = m.processing_time;
      n.attached = m.attached;
    }
    p.sequence.push_back(std::move(n));
  }
  for (std::size_t i = 0; i + 1 < p.sequence.size(); ++i) {
    const Site a{p.sequence[i].id, p.sequence[i].loc};
    const Site b{p.sequence[i + 1].id, p.sequence[i + 1].loc};
    p.leg_times.push_back(inst.transport_ticks(a, b));
    p.leg_energies.push_back(inst.transport_energy(a, b));
    p.total_energy += p.leg_energies.back();
  }
  return std::make_shared<const Path>(std::move(p));
}

}  // namespace

Schedule schedule_from_json(const std::string& text, const Instance& inst) {
  nlohmann::ordered_json root;
  try {
    root = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("schedule parse error: ") + e.what());
  }
  try {
    if (field(root, "format_version", "schedule").get<int>() != kFormatVersion) {
      throw InputError("unsupported schedule format_version");
    }
    Schedule s;
    s.makespan = field(root, "makespan", "schedule").get<Tick>();
    s.total_cost = field(root, "total_cost", "schedule").get<double>();

    int var = 0;
    for (const auto& e : field(root, "accepted", "schedule")) {
      Candidate c;
      c.job_id = e.value("job", std::string{});
      const auto ids = field(e, "route", "accepted entry").get<std::vector<std::string>>();
      c.path = route_from_ids(ids, c.job_id, inst);
      c.times = field(e, "times", "accepted entry").get<std::vector<Tick>>();
      if (c.times.size() != c.path->sequence.size()) {
        throw InputError("accepted entry: times length differs from route length");
      }
      c.energy = field(e, "energy", "accepted entry").get<double>();
      c.finish = field(e, "finish", "accepted entry").get<Tick>();
      c.var_id = var++;
      s.accepted.push_back(std::move(c));
      s.accepted_costs.push_back(field(e, "cost", "accepted entry").get<double>());
    }

    for (const auto& e : field(root, "segments", "schedule")) {
      SegmentStats st;
      st.segment = field(e, "segment", "segment entry").get<int>();
      st.attempt = field(e, "attempt", "segment entry").get<int>();
      const auto w = field(e, "window", "segment entry").get<std::vector<Tick>>();
      if (w.size() != 2) throw InputError("segment entry: window must be [start, end]");
      st.window = {w[0], w[1]};
      st.selected_jobs = field(e, "jobs", "segment entry").get<std::vector<std::string>>();
      st.n_candidates = field(e, "candidates", "segment entry").get<std::size_t>();
      st.status = status_from_name(field(e, "status", "segment entry").get<std::string>());
      st.objective = field(e, "objective", "segment entry").get<double>();
      st.n_assigned = field(e, "assigned", "segment entry").get<int>();
      st.n_relocations = field(e, "relocations", "segment entry").get<int>();
      st.first_accepted = field(e, "first_accepted", "segment entry").get<std::size_t>();
      s.segments.push_back(std::move(st));
    }

    s.warnings = field(root, "warnings", "schedule").get<std::vector<std::string>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("schedule field error: ") + e.what());
  }
}

void save_schedule(const Schedule& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << schedule_to_json(s);
  if (!out) throw InputError("failed writing '" + path + "'");
}

Schedule load_schedule(const std::string& path, const Instance& inst) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return schedule_from_json(buf.str(), inst);
}

}  // namespace ssched
