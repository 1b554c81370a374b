#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ssched {

using Tick = long long;

// Input that fails to parse or violates a model invariant. Maps to exit
// code 2 in the CLI and SSCHED_ERR_PARSE in the C API.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// No schedule exists (unreachable job, stalled optimization). Maps to exit
// code 1 / SSCHED_ERR_INFEASIBLE.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Location {
  double x = 0.0;
  double y = 0.0;
};

double distance(Location a, Location b);

enum class StageKind { BaseDispatch, Job, Machine, BaseReceive };

std::string_view to_string(StageKind kind);
StageKind stage_kind_from_string(std::string_view s);

struct Stage {
  int index = 0;
  StageKind kind = StageKind::Machine;
  bool skippable = false;
};

// A machine or a physical base station. Bases appear in the stage graph
// twice (dispatch and receive) but there is a single Facility record with a
// shared transporter stock.
struct Facility {
  std::string id;
  int stage = -1;  // machine stage index; unused for bases
  Location location;
  int processing_time = 0;
  int capacity = 1;               // machines: parallel operations
  bool attached = true;           // machines: false frees the transporter
  int initial_transporters = 0;   // bases: A(b,0)
  int storage_capacity = 1;       // bases: c(b)
};

struct Job {
  std::string id;
  Location location;
  int processing_time = 0;
  std::optional<Tick> due_time;
  std::vector<int> skip_stages;  // sorted, unique
};

struct TransporterParams {
  double e_max = 1.0;       // maximum energy per trip
  double speed = 1.0;       // meters per second
  double energy_rate = 1.0; // energy per meter
};

struct Weights {
  double alpha = 1.0;   // energy weight
  double beta = 1.0;    // finish-time weight
  int k_exponent = 1;   // finish time is raised to this power in the cost
  double zeta = 0.0;    // quadratic lateness weight for jobs with due times
};

struct TransportOverride {
  Tick tt = 0;
  double te = 0.0;
};

// Endpoint of a transport leg; used to query times/energies for any mix of
// facilities and jobs.
struct Site {
  std::string_view id;
  Location loc;
};

inline Site site_of(const Facility& f) { return {f.id, f.location}; }
inline Site site_of(const Job& j) { return {j.id, j.location}; }

class Instance {
 public:
  std::vector<Stage> stages;
  std::vector<Facility> machines;
  std::vector<Facility> bases;
  std::vector<Job> jobs;
  TransporterParams transporter;
  Weights weights;
  double delta_t = 1.0;  // seconds per tick
  std::map<std::pair<std::string, std::string>, TransportOverride> transport_overrides;

  // Checks every invariant (throws InputError naming the violated rule) and
  // builds the derived lookup tables. Must be called after the fields are
  // populated; instances are treated as immutable afterwards.
  void finalize();

  int stage_count() const { return static_cast<int>(stages.size()); }

  // Indices into `machines` for one stage.
  const std::vector<int>& machines_at(int stage) const;

  int job_index(std::string_view id) const;
  int base_index(std::string_view id) const;
  int machine_index(std::string_view id) const;

  // Travel time in ticks between two sites: the override if one exists for
  // (a.id, b.id), else ceil(dist / speed / delta_t).
  Tick transport_ticks(const Site& a, const Site& b) const;

  // Travel energy: override or dist * energy_rate.
  double transport_energy(const Site& a, const Site& b) const;

 private:
  const TransportOverride* find_override(const Site& a, const Site& b) const;

  std::vector<std::vector<int>> machines_by_stage_;
  std::map<std::string, int, std::less<>> job_by_id_;
  std::map<std::string, int, std::less<>> base_by_id_;
  std::map<std::string, int, std::less<>> machine_by_id_;
};

// JSON (de)serialization. Loading finalizes the instance; parse errors and
// invariant violations surface as InputError with field context.
Instance instance_from_json(const std::string& text);
std::string instance_to_json(const Instance& instance);
Instance load_instance(const std::string& path);
void save_instance(const Instance& instance, const std::string& path);

}  // namespace ssched
