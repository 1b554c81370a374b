#include "core/instance.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ssched {

using ordered_json = nlohmann::ordered_json;

double distance(Location a, Location b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

std::string_view to_string(StageKind kind) {
  switch (kind) {
    case StageKind::BaseDispatch: return "base_dispatch";
    case StageKind::Job: return "job";
    case StageKind::Machine: return "machine";
    case StageKind::BaseReceive: return "base_receive";
  }
  return "?";
}

StageKind stage_kind_from_string(std::string_view s) {
  if (s == "base_dispatch") return StageKind::BaseDispatch;
  if (s == "job") return StageKind::Job;
  if (s == "machine") return StageKind::Machine;
  if (s == "base_receive") return StageKind::BaseReceive;
  throw InputError("unknown stage kind '" + std::string(s) + "'");
}

namespace {

void require(bool ok, const std::string& rule) {
  if (!ok) throw InputError("instance invariant violated: " + rule);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void Instance::finalize() {
  require(!stages.empty() && stages.size() >= 3, "S >= 3 stages required");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    require(stages[i].index == static_cast<int>(i), "stages must be numbered 0..S-1 in order");
  }
  require(stages.front().kind == StageKind::BaseDispatch, "stage 0 must be base_dispatch");
  require(stages[1].kind == StageKind::Job, "stage 1 must be job");
  require(stages.back().kind == StageKind::BaseReceive, "stage S-1 must be base_receive");
  for (std::size_t i = 2; i + 1 < stages.size(); ++i) {
    require(stages[i].kind == StageKind::Machine, "stages 2..S-2 must be machine stages");
  }

  require(delta_t > 0.0 && finite(delta_t), "delta_t must be a positive real");
  require(transporter.e_max > 0.0 && finite(transporter.e_max), "transporter.e_max must be positive");
  require(transporter.speed > 0.0 && finite(transporter.speed), "transporter.speed must be positive");
  require(transporter.energy_rate > 0.0 && finite(transporter.energy_rate),
          "transporter.energy_rate must be positive");

  require(weights.alpha >= 0.0 && weights.beta >= 0.0, "weights must be nonnegative");
  require(weights.alpha + weights.beta > 0.0, "alpha + beta must be positive");
  require(weights.k_exponent >= 1, "k_exponent must be a positive integer");
  require(weights.zeta >= 0.0, "zeta must be nonnegative");

  std::set<std::string> ids;
  auto claim_id = [&](const std::string& id, const char* what) {
    require(!id.empty(), std::string(what) + " id must be nonempty");
    require(ids.insert(id).second, "duplicate id '" + id + "'");
  };

  machines_by_stage_.assign(stages.size(), {});
  machine_by_id_.clear();
  for (std::size_t m = 0; m < machines.size(); ++m) {
    const Facility& f = machines[m];
    claim_id(f.id, "machine");
    require(f.stage >= 0 && f.stage < stage_count(), "machine '" + f.id + "' has out-of-range stage");
    require(stages[f.stage].kind == StageKind::Machine,
            "machine '" + f.id + "' must sit on a machine stage");
    require(f.capacity >= 1, "machine '" + f.id + "' capacity must be >= 1");
    require(f.processing_time >= 0, "machine '" + f.id + "' processing_time must be >= 0");
    require(finite(f.location.x) && finite(f.location.y), "machine '" + f.id + "' location must be finite");
    machines_by_stage_[f.stage].push_back(static_cast<int>(m));
    machine_by_id_[f.id] = static_cast<int>(m);
  }
  for (std::size_t s = 2; s + 1 < stages.size(); ++s) {
    require(!machines_by_stage_[s].empty(),
            "machine stage " + std::to_string(s) + " has no machines (stages must be connected)");
  }

  base_by_id_.clear();
  require(!bases.empty(), "at least one base station required");
  for (std::size_t b = 0; b < bases.size(); ++b) {
    const Facility& f = bases[b];
    claim_id(f.id, "base");
    require(f.processing_time >= 0, "base '" + f.id + "' processing_time must be >= 0");
    require(f.storage_capacity >= 1, "base '" + f.id + "' storage_capacity must be >= 1");
    require(f.initial_transporters >= 0, "base '" + f.id + "' initial_transporters must be >= 0");
    require(f.initial_transporters <= f.storage_capacity,
            "base '" + f.id + "' initial_transporters exceeds storage_capacity");
    require(finite(f.location.x) && finite(f.location.y), "base '" + f.id + "' location must be finite");
    base_by_id_[f.id] = static_cast<int>(b);
  }

  job_by_id_.clear();
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Job& job = jobs[j];
    claim_id(job.id, "job");
    require(job.processing_time >= 0, "job '" + job.id + "' processing_time must be >= 0");
    require(finite(job.location.x) && finite(job.location.y), "job '" + job.id + "' location must be finite");
    for (int s : job.skip_stages) {
      require(s >= 0 && s < stage_count(), "job '" + job.id + "' skips out-of-range stage");
      require(stages[s].kind == StageKind::Machine && stages[s].skippable,
              "job '" + job.id + "' skips stage " + std::to_string(s) +
                  " which is not a skippable machine stage");
    }
    job_by_id_[job.id] = static_cast<int>(j);
  }

  for (const auto& [key, ov] : transport_overrides) {
    require(ids.count(key.first) && ids.count(key.second),
            "transport override references unknown id (" + key.first + ", " + key.second + ")");
    require(ov.tt >= 0, "transport override tt must be >= 0");
    require(ov.te >= 0.0 && finite(ov.te), "transport override te must be >= 0");
  }
}

const std::vector<int>& Instance::machines_at(int stage) const {
  return machines_by_stage_.at(stage);
}

namespace {
int lookup(const std::map<std::string, int, std::less<>>& m, std::string_view id, const char* what) {
  auto it = m.find(id);
  if (it == m.end()) throw InputError("unknown " + std::string(what) + " id '" + std::string(id) + "'");
  return it->second;
}
}  // namespace

int Instance::job_index(std::string_view id) const { return lookup(job_by_id_, id, "job"); }
int Instance::base_index(std::string_view id) const { return lookup(base_by_id_, id, "base"); }
int Instance::machine_index(std::string_view id) const { return lookup(machine_by_id_, id, "machine"); }

const TransportOverride* Instance::find_override(const Site& a, const Site& b) const {
  if (transport_overrides.empty()) return nullptr;
  auto it = transport_overrides.find({std::string(a.id), std::string(b.id)});
  return it == transport_overrides.end() ? nullptr : &it->second;
}

Tick Instance::transport_ticks(const Site& a, const Site& b) const {
  if (const TransportOverride* ov = find_override(a, b)) return ov->tt;
  const double d = distance(a.loc, b.loc);
  if (d == 0.0) return 0;
  return static_cast<Tick>(std::ceil(d / transporter.speed / delta_t));
}

double Instance::transport_energy(const Site& a, const Site& b) const {
  if (const TransportOverride* ov = find_override(a, b)) return ov->te;
  return distance(a.loc, b.loc) * transporter.energy_rate;
}

// ---------------------------------------------------------------------------
// JSON I/O

namespace {

constexpr int kFormatVersion = 1;

const ordered_json& field(const ordered_json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError("instance parse error: missing field '" + std::string(key) + "' in " + ctx);
  return *it;
}

Location location_from_json(const ordered_json& v, const std::string& ctx) {
  if (!v.is_object()) throw InputError("instance parse error: " + ctx + " location must be an object");
  Location loc;
  loc.x = field(v, "x", ctx).get<double>();
  loc.y = field(v, "y", ctx).get<double>();
  return loc;
}

ordered_json location_to_json(Location loc) {
  return ordered_json{{"x", loc.x}, {"y", loc.y}};
}

}  // namespace

Instance instance_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("instance parse error: ") + e.what());
  }

  try {
    Instance inst;
    if (doc.contains("format_version") && doc["format_version"].get<int>() != kFormatVersion) {
      throw InputError("instance parse error: unsupported format_version");
    }

    for (const auto& sj : field(doc, "stages", "document")) {
      Stage st;
      st.index = field(sj, "index", "stage").get<int>();
      st.kind = stage_kind_from_string(field(sj, "kind", "stage").get<std::string>());
      st.skippable = sj.value("skippable", false);
      inst.stages.push_back(st);
    }

    for (const auto& mj : field(doc, "machines", "document")) {
      Facility f;
      f.id = field(mj, "id", "machine").get<std::string>();
      f.stage = field(mj, "stage", "machine '" + f.id + "'").get<int>();
      f.location = location_from_json(field(mj, "location", f.id), f.id);
      f.processing_time = field(mj, "processing_time", "machine '" + f.id + "'").get<int>();
      f.capacity = field(mj, "capacity", "machine '" + f.id + "'").get<int>();
      f.attached = mj.value("attached", true);
      inst.machines.push_back(std::move(f));
    }

    for (const auto& bj : field(doc, "bases", "document")) {
      Facility f;
      f.id = field(bj, "id", "base").get<std::string>();
      f.location = location_from_json(field(bj, "location", f.id), f.id);
      f.processing_time = field(bj, "processing_time", "base '" + f.id + "'").get<int>();
      f.initial_transporters = field(bj, "initial_transporters", "base '" + f.id + "'").get<int>();
      f.storage_capacity = field(bj, "storage_capacity", "base '" + f.id + "'").get<int>();
      inst.bases.push_back(std::move(f));
    }

    for (const auto& jj : field(doc, "jobs", "document")) {
      Job j;
      j.id = field(jj, "id", "job").get<std::string>();
      j.location = location_from_json(field(jj, "location", j.id), j.id);
      j.processing_time = jj.value("processing_time", 0);
      if (jj.contains("due_time") && !jj["due_time"].is_null()) {
        j.due_time = jj["due_time"].get<Tick>();
      }
      if (jj.contains("skip_stages")) {
        for (const auto& s : jj["skip_stages"]) j.skip_stages.push_back(s.get<int>());
      }
      inst.jobs.push_back(std::move(j));
    }

    const auto& tj = field(doc, "transporter", "document");
    inst.transporter.e_max = field(tj, "e_max", "transporter").get<double>();
    inst.transporter.speed = field(tj, "speed", "transporter").get<double>();
    inst.transporter.energy_rate = field(tj, "energy_rate", "transporter").get<double>();

    const auto& wj = field(doc, "weights", "document");
    inst.weights.alpha = field(wj, "alpha", "weights").get<double>();
    inst.weights.beta = field(wj, "beta", "weights").get<double>();
    inst.weights.k_exponent = wj.value("k_exponent", 1);
    inst.weights.zeta = wj.value("zeta", 0.0);

    inst.delta_t = field(doc, "delta_t", "document").get<double>();

    if (doc.contains("transport_overrides")) {
      for (const auto& ov : doc["transport_overrides"]) {
        TransportOverride t;
        t.tt = field(ov, "tt", "transport_overrides").get<Tick>();
        t.te = field(ov, "te", "transport_overrides").get<double>();
        inst.transport_overrides[{field(ov, "from", "transport_overrides").get<std::string>(),
                                  field(ov, "to", "transport_overrides").get<std::string>()}] = t;
      }
    }

    inst.finalize();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("instance parse error: ") + e.what());
  }
}

std::string instance_to_json(const Instance& inst) {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["delta_t"] = inst.delta_t;
  doc["transporter"] = ordered_json{{"e_max", inst.transporter.e_max},
                                    {"speed", inst.transporter.speed},
                                    {"energy_rate", inst.transporter.energy_rate}};
  doc["weights"] = ordered_json{{"alpha", inst.weights.alpha},
                                {"beta", inst.weights.beta},
                                {"k_exponent", inst.weights.k_exponent},
                                {"zeta", inst.weights.zeta}};
  doc["stages"] = ordered_json::array();
  for (const Stage& s : inst.stages) {
    doc["stages"].push_back(ordered_json{{"index", s.index},
                                         {"kind", std::string(to_string(s.kind))},
                                         {"skippable", s.skippable}});
  }
  doc["machines"] = ordered_json::array();
  for (const Facility& m : inst.machines) {
    doc["machines"].push_back(ordered_json{{"id", m.id},
                                           {"stage", m.stage},
                                           {"location", location_to_json(m.location)},
                                           {"processing_time", m.processing_time},
                                           {"capacity", m.capacity},
                                           {"attached", m.attached}});
  }
  doc["bases"] = ordered_json::array();
  for (const Facility& b : inst.bases) {
    doc["bases"].push_back(ordered_json{{"id", b.id},
                                        {"location", location_to_json(b.location)},
                                        {"processing_time", b.processing_time},
                                        {"initial_transporters", b.initial_transporters},
                                        {"storage_capacity", b.storage_capacity}});
  }
  doc["jobs"] = ordered_json::array();
  for (const Job& j : inst.jobs) {
    ordered_json jj{{"id", j.id},
                    {"location", location_to_json(j.location)},
                    {"processing_time", j.processing_time}};
    if (j.due_time) jj["due_time"] = *j.due_time;
    if (!j.skip_stages.empty()) jj["skip_stages"] = j.skip_stages;
    doc["jobs"].push_back(std::move(jj));
  }
  if (!inst.transport_overrides.empty()) {
    doc["transport_overrides"] = ordered_json::array();
    for (const auto& [key, ov] : inst.transport_overrides) {
      doc["transport_overrides"].push_back(
          ordered_json{{"from", key.first}, {"to", key.second}, {"tt", ov.tt}, {"te", ov.te}});
    }
  }
  return doc.dump(2) + "\n";
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open instance file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write instance file '" + path + "'");
  out << instance_to_json(inst);
}

}  // namespace ssched
