#pragma once

#include <string>
#include <vector>

#include "core/instance.hpp"
#include "core/segmenter.hpp"

namespace ssched {

// One broken feasibility rule. `tick` is -1 for violations that are not
// tied to a specific tick (energy, coverage, shape).
struct Violation {
  std::string constraint;
  Tick tick = -1;
  std::string facility;
  std::string detail;
};

struct Report {
  std::vector<Violation> violations;
  bool feasible() const { return violations.empty(); }
};

// Replays a schedule tick by tick against the instance, independently of the
// optimizer: route shape, timing recurrence, per-route energy bound,
// machine service counts, base availability and storage, one route per job.
// All facility data is re-resolved from the instance by id, so tampered
// embedded values cannot mask a violation.
Report validate(const Instance& instance, const Schedule& schedule);

std::string report_to_json(const Report& report);

}  // namespace ssched
