#include "core/validate.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace ssched {

namespace {

constexpr double kEnergyTol = 1e-9;

// Facility data re-resolved from the instance by id. kind mirrors the route
// position rules: endpoints are bases, the candidate's own job id is the
// pickup, everything else must be a machine.
struct Stop {
  StageKind kind = StageKind::Machine;
  int index = -1;
  Tick pt = 0;
  bool attached = true;
  Location loc{};
  int stage = -1;  // machines only
};

int find_by_id(const std::vector<Facility>& v, const std::string& id) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

int find_job(const std::vector<Job>& v, const std::string& id) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

std::string route_label(const Candidate& c) {
  if (!c.is_relocation()) return c.job_id;
  if (!c.path || c.path->sequence.size() < 2) return "relocation";
  return "relocation " + c.path->sequence.front().id + "->" + c.path->sequence.back().id;
}

}  // namespace

Report validate(const Instance& inst, const Schedule& sched) {
  Report rep;
  auto flag = [&](const char* constraint, Tick tick, std::string facility, std::string detail) {
    rep.violations.push_back({constraint, tick, std::move(facility), std::move(detail)});
  };

  // Resolve each route against the instance; shape failures disqualify a
  // candidate from the resource replay (its ticks would be meaningless).
  std::vector<std::vector<Stop>> resolved(sched.accepted.size());
  std::vector<bool> usable(sched.accepted.size(), false);

  for (std::size_t ci = 0; ci < sched.accepted.size(); ++ci) {
    const Candidate& c = sched.accepted[ci];
    const std::string label = route_label(c);
    if (!c.path || c.path->sequence.size() < 2) {
      flag("route-shape", -1, label, "route has fewer than two stops");
      continue;
    }
    const auto& seq = c.path->sequence;
    if (c.times.size() != seq.size()) {
      flag("route-shape", -1, label, "times length differs from route length");
      continue;
    }

    std::vector<Stop> stops(seq.size());
    bool ok = true;
    int job_visits = 0;
    int last_stage = 1;  // machine stages start above the pickup stage
    for (std::size_t i = 0; i < seq.size() && ok; ++i) {
      const std::string& id = seq[i].id;
      Stop& s = stops[i];
      if (i == 0 || i + 1 == seq.size()) {
        const int b = find_by_id(inst.bases, id);
        if (b < 0) {
          flag("route-shape", -1, label, "endpoint '" + id + "' is not a base");
          ok = false;
          break;
        }
        s = {i == 0 ? StageKind::BaseDispatch : StageKind::BaseReceive,
             b,
             inst.bases[b].processing_time,
             true,
             inst.bases[b].location,
             -1};
      } else if (!c.job_id.empty() && id == c.job_id) {
        const int j = find_job(inst.jobs, id);
        if (j < 0) {
          flag("route-shape", -1, label, "unknown job '" + id + "'");
          ok = false;
          break;
        }
        if (i != 1) {
          flag("route-shape", -1, label, "pickup is not the first stop after dispatch");
          ok = false;
          break;
        }
        s = {StageKind::Job, j, inst.jobs[j].processing_time, true, inst.jobs[j].location, -1};
        ++job_visits;
      } else {
        const int m = find_by_id(inst.machines, id);
        if (m < 0) {
          flag("route-shape", -1, label, "stop '" + id + "' is neither the job nor a machine");
          ok = false;
          break;
        }
        const Facility& mach = inst.machines[m];
        if (mach.stage <= last_stage) {
          flag("route-shape", -1, label, "machine '" + id + "' breaks the stage order");
          ok = false;
          break;
        }
        last_stage = mach.stage;
        s = {StageKind::Machine, m, mach.processing_time, mach.attached, mach.location,
             mach.stage};
      }
    }
    if (!ok) continue;

    if (c.is_relocation()) {
      if (seq.size() != 2) {
        flag("route-shape", -1, label, "relocation must have exactly two stops");
        continue;
      }
    } else {
      if (job_visits != 1) {
        flag("route-shape", -1, label, "route does not visit its job exactly once");
        continue;
      }
      // Every non-skipped machine stage must be served, each at most once.
      const int j = stops[1].index;
      std::vector<int> want;
      for (int st = 2; st + 1 < inst.stage_count(); ++st) {
        const auto& skips = inst.jobs[j].skip_stages;
        if (std::find(skips.begin(), skips.end(), st) == skips.end()) want.push_back(st);
      }
      std::vector<int> got;
      for (const Stop& s : stops) {
        if (s.kind == StageKind::Machine) got.push_back(s.stage);
      }
      if (got != want) {
        flag("route-shape", -1, label, "machine stages do not match the job's stage plan");
        continue;
      }
    }

    // Timing recurrence over instance-derived legs.
    bool timing_ok = true;
    if (c.times[0] < 0) {
      flag("timing", c.times[0], label, "dispatch tick is negative");
      timing_ok = false;
    }
    double energy = 0.0;
    for (std::size_t i = 1; i < stops.size(); ++i) {
      const Site a{seq[i - 1].id, stops[i - 1].loc};
      const Site b{seq[i].id, stops[i].loc};
      const Tick hold = stops[i - 1].attached ? stops[i - 1].pt : 0;
      const Tick want_t = c.times[i - 1] + inst.transport_ticks(a, b) + hold;
      if (c.times[i] != want_t) {
        flag("timing", c.times[i], label,
             "stop " + std::to_string(i) + " expected tick " + std::to_string(want_t));
        timing_ok = false;
      }
      energy += inst.transport_energy(a, b);
    }
    const Tick want_finish = c.times.back() + stops.back().pt;
    if (c.finish != want_finish) {
      flag("timing", c.finish, label, "finish expected " + std::to_string(want_finish));
      timing_ok = false;
    }

    if (energy >= inst.transporter.e_max) {
      flag("energy", -1, label, "route energy " + std::to_string(energy) +
                                    " reaches the battery limit");
    }
    if (std::abs(energy - c.energy) > kEnergyTol) {
      flag("energy-mismatch", -1, label, "stored " + std::to_string(c.energy) +
                                             ", recomputed " + std::to_string(energy));
    }

    resolved[ci] = std::move(stops);
    usable[ci] = timing_ok;
  }

  // Horizon for the dense replay.
  Tick maxpt = 0;
  for (const Facility& m : inst.machines) maxpt = std::max<Tick>(maxpt, m.processing_time);
  for (const Facility& b : inst.bases) maxpt = std::max<Tick>(maxpt, b.processing_time);
  Tick last_tick = sched.makespan;
  Tick computed_makespan = 0;
  for (const Candidate& c : sched.accepted) {
    if (c.times.empty()) continue;
    last_tick = std::max(last_tick, c.times.back());
    computed_makespan = std::max(computed_makespan, c.times.back());
  }
  if (sched.makespan != computed_makespan) {
    flag("makespan", sched.makespan, "",
         "stored makespan differs from last arrival " + std::to_string(computed_makespan));
  }
  const Tick horizon = last_tick + maxpt + 1;

  // Machine service counts, tick by tick. A service occupies capacity over
  // [start, start + pt] whether or not the transporter waits.
  std::vector<std::vector<int>> in_service(inst.machines.size(),
                                           std::vector<int>(horizon + 1, 0));
  // Base stock deltas: availability debits at dispatch and credits once the
  // receipt finishes recharging; storage counts presence from arrival.
  std::vector<std::vector<int>> avail_delta(inst.bases.size(), std::vector<int>(horizon + 1, 0));
  std::vector<std::vector<int>> store_delta(inst.bases.size(), std::vector<int>(horizon + 1, 0));

  for (std::size_t ci = 0; ci < sched.accepted.size(); ++ci) {
    if (!usable[ci]) continue;
    const Candidate& c = sched.accepted[ci];
    const std::vector<Stop>& stops = resolved[ci];
    for (std::size_t i = 0; i < stops.size(); ++i) {
      if (stops[i].kind == StageKind::Machine) {
        const Tick s = c.times[i];
        const Tick e = std::min<Tick>(s + stops[i].pt, horizon);
        for (Tick t = std::max<Tick>(s, 0); t <= e; ++t) ++in_service[stops[i].index][t];
      }
    }
    const Tick dispatch = c.times.front();
    const Tick arrival = c.times.back();
    const Tick ready = arrival + stops.back().pt;
    if (dispatch >= 0 && dispatch <= horizon) {
      --avail_delta[stops.front().index][dispatch];
      --store_delta[stops.front().index][dispatch];
    }
    if (ready >= 0 && ready <= horizon) ++avail_delta[stops.back().index][ready];
    if (arrival >= 0 && arrival <= horizon) ++store_delta[stops.back().index][arrival];
  }

  // One violation per entry into a bad state, not one per tick it persists.
  for (std::size_t m = 0; m < inst.machines.size(); ++m) {
    bool over = false;
    for (Tick t = 0; t <= horizon; ++t) {
      const bool bad = in_service[m][t] > inst.machines[m].capacity;
      if (bad && !over) {
        flag("machine-capacity", t, inst.machines[m].id,
             std::to_string(in_service[m][t]) + " services on capacity " +
                 std::to_string(inst.machines[m].capacity));
      }
      over = bad;
    }
  }
  for (std::size_t b = 0; b < inst.bases.size(); ++b) {
    long long avail = inst.bases[b].initial_transporters;
    long long stored = inst.bases[b].initial_transporters;
    bool short_of = false;
    bool overfull = false;
    for (Tick t = 0; t <= horizon; ++t) {
      avail += avail_delta[b][t];
      stored += store_delta[b][t];
      if (avail < 0 && !short_of) {
        flag("base-availability", t, inst.bases[b].id,
             "available transporters " + std::to_string(avail));
      }
      short_of = avail < 0;
      if (stored > inst.bases[b].storage_capacity && !overfull) {
        flag("base-storage", t, inst.bases[b].id,
             std::to_string(stored) + " stored on capacity " +
                 std::to_string(inst.bases[b].storage_capacity));
      }
      overfull = stored > inst.bases[b].storage_capacity;
    }
  }

  // Exactly one accepted route per job.
  for (const Job& job : inst.jobs) {
    int count = 0;
    for (const Candidate& c : sched.accepted) {
      if (!c.is_relocation() && c.job_id == job.id) ++count;
    }
    if (count == 0) flag("job-missing", -1, job.id, "no accepted route");
    if (count > 1) flag("job-duplicate", -1, job.id, std::to_string(count) + " accepted routes");
  }

  return rep;
}

std::string report_to_json(const Report& rep) {
  nlohmann::ordered_json root;
  root["format_version"] = 1;
  root["feasible"] = rep.feasible();
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const Violation& v : rep.violations) {
    nlohmann::ordered_json e;
    e["constraint"] = v.constraint;
    e["tick"] = v.tick;
    e["facility"] = v.facility;
    e["detail"] = v.detail;
    list.push_back(std::move(e));
  }
  root["violations"] = std::move(list);
  return root.dump(2) + "\n";
}

}  // namespace ssched
