#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/pathfind.hpp"

namespace ssched {

// Inclusive tick interval of allowed dispatch times.
struct TimeWindow {
  Tick start = 0;
  Tick end = 0;

  bool contains(Tick t) const { return t >= start && t <= end; }
  Tick length() const { return end - start + 1; }
};

// A path stamped with a concrete dispatch tick. times[i] is the arrival at
// sequence[i]; a decision variable per candidate drives the per-segment
// program. job_id is empty for transporter relocations.
struct Candidate {
  std::shared_ptr<const Path> path;
  std::vector<Tick> times;
  int var_id = -1;
  std::string job_id;
  double energy = 0.0;
  Tick finish = 0;  // arrival at the receive base plus its pt

  bool is_relocation() const { return job_id.empty(); }
  Tick dispatch_tick() const { return times.front(); }
  Tick arrival_tick() const { return times.back(); }
};

// Arrival times along a path for one dispatch tick:
// t[0] = dispatch; t[i] = t[i-1] + leg travel + previous node's pt when the
// transporter stays attached through that processing.
std::vector<Tick> times_for(const Path& path, Tick dispatch);

// One candidate per (path, dispatch tick), dispatch sweeping the window from
// start in dispatch_stride steps (stride 1 covers every tick). Variable ids
// run sequentially from first_var_id, path-major. Deterministic.
std::vector<Candidate> generate_candidates(const std::vector<Path>& paths, TimeWindow window,
                                           int dispatch_stride = 1, int first_var_id = 0);

}  // namespace ssched
