#pragma once

// Small instance builders shared by the unit suites.

#include <optional>
#include <string>
#include <vector>

#include "core/instance.hpp"

namespace ssched::testing {

// Four stages: dispatch, job, one lab stage, receive. Two bases 100 m apart
// on the x axis, one lab halfway, jobs wherever the caller puts them.
inline Instance tiny_instance() {
  Instance inst;
  inst.stages = {
      {0, StageKind::BaseDispatch, false},
      {1, StageKind::Job, false},
      {2, StageKind::Machine, true},
      {3, StageKind::BaseReceive, false},
  };
  inst.machines = {
      {"lab1", 2, {50.0, 0.0}, 4, 1, true, 0, 1},
  };
  inst.bases = {
      {"b1", -1, {0.0, 0.0}, 2, 1, true, 1, 2},
      {"b2", -1, {100.0, 0.0}, 2, 1, true, 1, 2},
  };
  inst.jobs = {
      {"j1", {100.0, 0.0}, 0, std::nullopt, {}},
      {"j2", {0.0, 50.0}, 0, std::nullopt, {}},
  };
  inst.transporter = {1000.0, 10.0, 0.5};
  inst.weights = {1.0, 1.0, 1, 0.0};
  inst.delta_t = 5.0;
  inst.finalize();
  return inst;
}

}  // namespace ssched::testing
