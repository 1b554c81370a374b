#include "core/candidates.hpp"

namespace ssched {

std::vector<Tick> times_for(const Path& path, Tick dispatch) {
  std::vector<Tick> times;
  times.reserve(path.sequence.size());
  times.push_back(dispatch);
  for (std::size_t i = 1; i < path.sequence.size(); ++i) {
    const PathNode& prev = path.sequence[i - 1];
    times.push_back(times.back() + path.leg_times[i - 1] + (prev.attached ? prev.pt : 0));
  }
  return times;
}

std::vector<Candidate> generate_candidates(const std::vector<Path>& paths, TimeWindow window,
                                           int dispatch_stride, int first_var_id) {
  if (window.start < 0 || window.end < window.start) {
    throw InputError("generate_candidates: window must satisfy 0 <= start <= end");
  }
  if (dispatch_stride < 1) throw InputError("generate_candidates: dispatch_stride must be >= 1");

  std::vector<Candidate> out;
  int var = first_var_id;
  for (const Path& path : paths) {
    auto shared = std::make_shared<const Path>(path);
    std::string job_id;
    if (path.sequence.size() >= 2 && path.sequence[1].kind == StageKind::Job) {
      job_id = path.sequence[1].id;
    }
    for (Tick t = window.start; t <= window.end; t += dispatch_stride) {
      Candidate c;
      c.path = shared;
      c.times = times_for(path, t);
      c.var_id = var++;
      c.job_id = job_id;
      c.energy = path.total_energy;
      c.finish = c.times.back() + path.sequence.back().pt;
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace ssched
