#include "core/validate.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace ssched;

namespace {

// Collinear layout with round-number travel times (speed 10, rate 1):
//   b0 (0,0) pt 2          tt(b0,j0)   = 3   e 30
//   j0 (30,0) pt 0         tt(j0,lab0) = 3   e 30
//   lab0 (60,0) pt 4       tt(lab0,b0) = 6   e 60
// Route [b0 j0 lab0 b0] at dispatch d: times [d, d+5, d+8, d+18],
// finish d+20, energy 120.
Instance line_instance() {
  Instance inst;
  inst.stages = {
      {0, StageKind::BaseDispatch, false},
      {1, StageKind::Job, false},
      {2, StageKind::Machine, false},
      {3, StageKind::BaseReceive, false},
  };
  inst.machines = {{"lab0", 2, {60.0, 0.0}, 4, 1, true, 0, 1}};
  inst.bases = {{"b0", -1, {0.0, 0.0}, 2, 1, true, 2, 2}};
  inst.jobs = {{"j0", {30.0, 0.0}, 0, std::nullopt, {}}};
  inst.transporter = {1e9, 10.0, 1.0};
  inst.weights = {1.0, 1.0, 1, 0.0};
  inst.delta_t = 1.0;
  inst.finalize();
  return inst;
}

// A candidate whose path carries deliberately wrong embedded node data
// (kind, pt, attached, locations). The validator must judge it purely by
// the id sequence plus the instance, so the garbage stays invisible.
Candidate raw_candidate(const std::vector<std::string>& ids, std::vector<Tick> times,
                        std::string job_id, double energy, Tick finish) {
  Path p;
  for (const std::string& id : ids) {
    p.sequence.push_back({id, StageKind::Machine, -7, {-1.0, -1.0}, 99, false});
  }
  p.total_energy = -5.0;
  Candidate c;
  c.path = std::make_shared<const Path>(std::move(p));
  c.times = std::move(times);
  c.job_id = std::move(job_id);
  c.energy = energy;
  c.finish = finish;
  return c;
}

Schedule one_shot(std::vector<Candidate> accepted) {
  Schedule s;
  s.accepted = std::move(accepted);
  for (std::size_t i = 0; i < s.accepted.size(); ++i) {
    s.accepted[i].var_id = static_cast<int>(i);
    s.accepted_costs.push_back(0.0);
    if (!s.accepted[i].times.empty()) {
      s.makespan = std::max(s.makespan, s.accepted[i].times.back());
    }
  }
  return s;
}

std::map<std::string, int> families(const Report& rep) {
  std::map<std::string, int> out;
  for (const Violation& v : rep.violations) ++out[v.constraint];
  return out;
}

}  // namespace

TEST_CASE("a schedule produced by the optimizer validates clean") {
  Instance inst = line_instance();
  inst.jobs.push_back({"j1", {30.0, 0.0}, 0, std::nullopt, {}});
  inst.finalize();

  OptimizerConfig cfg;
  cfg.n_select = 2;
  cfg.n_clusters = 1;
  cfg.tau_h = 40;

  Schedule s = run(inst, cfg);
  REQUIRE(s.accepted.size() == 2);
  Report rep = validate(inst, s);
  REQUIRE_MESSAGE(rep.feasible(), report_to_json(rep));
}

TEST_CASE("a relocation schedule validates clean") {
  // Drained b0 next to the work, stocked b1 far away: the optimizer must
  // relocate before it can dispatch.
  Instance inst = line_instance();
  inst.bases = {
      {"b0", -1, {0.0, 0.0}, 2, 1, true, 0, 2},
      {"b1", -1, {100.0, 0.0}, 2, 1, true, 1, 1},
  };
  inst.machines[0].location = {20.0, 0.0};
  inst.jobs[0].location = {10.0, 0.0};
  inst.transporter.e_max = 110.0;
  inst.transport_overrides[{"lab0", "b1"}] = {8, 500.0};
  inst.finalize();

  OptimizerConfig cfg;
  cfg.n_select = 1;
  cfg.n_clusters = 1;
  cfg.tau_h = 20;

  Schedule s = run(inst, cfg);
  bool has_reloc = false;
  for (const Candidate& c : s.accepted) has_reloc |= c.is_relocation();
  REQUIRE(has_reloc);
  Report rep = validate(inst, s);
  REQUIRE_MESSAGE(rep.feasible(), report_to_json(rep));
}

TEST_CASE("saved and reloaded schedules still validate clean") {
  Instance inst = line_instance();
  inst.jobs.push_back({"j1", {50.0, 10.0}, 1, std::nullopt, {}});
  inst.finalize();

  OptimizerConfig cfg;
  cfg.n_select = 2;
  cfg.n_clusters = 1;
  cfg.tau_h = 40;

  Schedule s = run(inst, cfg);
  Schedule loaded = schedule_from_json(schedule_to_json(s), inst);
  Report rep = validate(inst, loaded);
  REQUIRE_MESSAGE(rep.feasible(), report_to_json(rep));
}

TEST_CASE("embedded path data is ignored in favor of the instance") {
  Instance inst = line_instance();
  // Correct ids and times, garbage everything else: still clean.
  Schedule s = one_shot({raw_candidate({"b0", "j0", "lab0", "b0"}, {0, 5, 8, 18}, "j0", 120.0, 20)});
  Report rep = validate(inst, s);
  CHECK_MESSAGE(rep.feasible(), report_to_json(rep));
}

TEST_CASE("a tampered stop time breaks the recurrence") {
  Instance inst = line_instance();
  // Stop 2 recorded one tick late: stops 2 and 3 both disagree.
  Schedule s = one_shot({raw_candidate({"b0", "j0", "lab0", "b0"}, {0, 5, 9, 18}, "j0", 120.0, 20)});
  Report rep = validate(inst, s);
  auto fam = families(rep);
  CHECK(fam == std::map<std::string, int>{{"timing", 2}});
  for (const Violation& v : rep.violations) CHECK(v.facility == "j0");
  CHECK(rep.violations[0].tick == 9);
}

TEST_CASE("a tampered makespan is caught") {
  Instance inst = line_instance();
  Schedule s = one_shot({raw_candidate({"b0", "j0", "lab0", "b0"}, {0, 5, 8, 18}, "j0", 120.0, 20)});
  s.makespan = 23;
  Report rep = validate(inst, s);
  auto fam = families(rep);
  CHECK(fam == std::map<std::string, int>{{"makespan", 1}});
  CHECK(rep.violations[0].tick == 23);
}

TEST_CASE("energy is recomputed from the instance") {
  Instance inst = line_instance();

  SUBCASE("a tampered energy field mismatches") {
    Schedule s =
        one_shot({raw_candidate({"b0", "j0", "lab0", "b0"}, {0, 5, 8, 18}, "j0", 100.0, 20)});
    Report rep = validate(inst, s);
    CHECK(families(rep) == std::map<std::string, int>{{"energy-mismatch", 1}});
  }

  SUBCASE("a route over the battery limit is caught even when its field agrees") {
    inst.transporter.e_max = 100.0;
    inst.finalize();
    Schedule s =
        one_shot({raw_candidate({"b0", "j0", "lab0", "b0"}, {0, 5, 8, 18}, "j0", 120.0, 20)});
    Report rep = validate(inst, s);
    CHECK(families(rep) == std::map<std::string, int>{{"energy", 1}});
  }
}

TEST_CASE("dispatching more transporters than a base holds is caught") {
  Instance inst = line_instance();
  inst.bases[0].initial_transporters = 1;
  inst.machines[0].capacity = 2;
  inst.jobs.push_back({"j1", {30.0, 0.0}, 0, std::nullopt, {}});
  inst.finalize();

  Schedule s = one_shot({
      raw_candidate({"b0", "j0", "lab0", "b0"}, {0, 5, 8, 18}, "j0", 120.0, 20),
      raw_candidate({"b0", "j1", "lab0", "b0"}, {0, 5, 8, 18}, "j1", 120.0, 20),
  });
  Report rep = validate(inst, s);
  auto fam = families(rep);
  CHECK(fam == std::map<std::string, int>{{"base-availability", 1}});
  CHECK(rep.violations[0].tick == 0);
  CHECK(rep.violations[0].facility == "b0");
}

TEST_CASE("overlapping services above machine capacity are caught") {
  Instance inst = line_instance();
  inst.jobs.push_back({"j1", {30.0, 0.0}, 0, std::nullopt, {}});
  inst.finalize();

  // Both transporters occupy lab0 over [8, 12] on capacity 1.
  Schedule s = one_shot({
      raw_candidate({"b0", "j0", "lab0", "b0"}, {0, 5, 8, 18}, "j0", 120.0, 20),
      raw_candidate({"b0", "j1", "lab0", "b0"}, {0, 5, 8, 18}, "j1", 120.0, 20),
  });
  Report rep = validate(inst, s);
  auto fam = families(rep);
  CHECK(fam == std::map<std::string, int>{{"machine-capacity", 1}});
  CHECK(rep.violations[0].tick == 8);
  CHECK(rep.violations[0].facility == "lab0");
}

TEST_CASE("returns beyond a base's storage capacity are caught") {
  Instance inst = line_instance();
  inst.bases.push_back({"b1", -1, {100.0, 0.0}, 2, 1, true, 0, 1});
  inst.machines[0].capacity = 2;
  inst.jobs.push_back({"j1", {30.0, 0.0}, 0, std::nullopt, {}});
  inst.finalize();

  // Both routes return to b1 (capacity 1, initially empty) at tick 16.
  Schedule s = one_shot({
      raw_candidate({"b0", "j0", "lab0", "b1"}, {0, 5, 8, 16}, "j0", 100.0, 18),
      raw_candidate({"b0", "j1", "lab0", "b1"}, {0, 5, 8, 16}, "j1", 100.0, 18),
  });
  Report rep = validate(inst, s);
  auto fam = families(rep);
  CHECK(fam == std::map<std::string, int>{{"base-storage", 1}});
  CHECK(rep.violations[0].tick == 16);
  CHECK(rep.violations[0].facility == "b1");
}

TEST_CASE("every job must appear exactly once") {
  Instance inst = line_instance();
  inst.jobs.push_back({"j1", {30.0, 0.0}, 0, std::nullopt, {}});
  inst.finalize();

  // j0 scheduled twice (disjoint in every resource), j1 not at all.
  Schedule s = one_shot({
      raw_candidate({"b0", "j0", "lab0", "b0"}, {0, 5, 8, 18}, "j0", 120.0, 20),
      raw_candidate({"b0", "j0", "lab0", "b0"}, {30, 35, 38, 48}, "j0", 120.0, 50),
  });
  Report rep = validate(inst, s);
  auto fam = families(rep);
  CHECK(fam == std::map<std::string, int>{{"job-duplicate", 1}, {"job-missing", 1}});
  for (const Violation& v : rep.violations) {
    if (v.constraint == "job-duplicate") CHECK(v.facility == "j0");
    if (v.constraint == "job-missing") CHECK(v.facility == "j1");
  }
}

TEST_CASE("malformed routes are reported as shape violations") {
  Instance inst = line_instance();

  SUBCASE("unknown stop id") {
    Schedule s =
        one_shot({raw_candidate({"b0", "j0", "labX", "b0"}, {0, 5, 8, 18}, "j0", 120.0, 20)});
    Report rep = validate(inst, s);
    REQUIRE(families(rep).count("route-shape") == 1);
    CHECK(rep.violations[0].detail.find("labX") != std::string::npos);
  }

  SUBCASE("skipped mandatory stage") {
    Schedule s = one_shot({raw_candidate({"b0", "j0", "b0"}, {0, 5, 8}, "j0", 60.0, 10)});
    Report rep = validate(inst, s);
    REQUIRE(families(rep).count("route-shape") == 1);
    CHECK(rep.violations[0].detail.find("stage") != std::string::npos);
  }

  SUBCASE("pickup after a machine") {
    Schedule s =
        one_shot({raw_candidate({"b0", "lab0", "j0", "b0"}, {0, 8, 11, 16}, "j0", 150.0, 18)});
    Report rep = validate(inst, s);
    REQUIRE(families(rep).count("route-shape") == 1);
    CHECK(rep.violations[0].detail.find("pickup") != std::string::npos);
  }

  SUBCASE("endpoint that is not a base") {
    Schedule s =
        one_shot({raw_candidate({"lab0", "j0", "lab0", "b0"}, {0, 5, 8, 18}, "j0", 120.0, 20)});
    Report rep = validate(inst, s);
    REQUIRE(families(rep).count("route-shape") == 1);
    CHECK(rep.violations[0].detail.find("endpoint") != std::string::npos);
  }

  SUBCASE("relocation with an intermediate stop") {
    Schedule s = one_shot({
        raw_candidate({"b0", "j0", "lab0", "b0"}, {0, 5, 8, 18}, "j0", 120.0, 20),
        raw_candidate({"b0", "lab0", "b0"}, {0, 8, 18}, "", 120.0, 20),
    });
    Report rep = validate(inst, s);
    REQUIRE(families(rep).count("route-shape") == 1);
    CHECK(rep.violations[0].detail.find("two stops") != std::string::npos);
    CHECK(rep.violations[0].facility == "relocation b0->b0");
  }

  SUBCASE("times shorter than the route") {
    Schedule s = one_shot({raw_candidate({"b0", "j0", "lab0", "b0"}, {0, 5}, "j0", 120.0, 20)});
    Report rep = validate(inst, s);
    REQUIRE(families(rep).count("route-shape") == 1);
    CHECK(rep.violations[0].detail.find("times") != std::string::npos);
  }
}

TEST_CASE("machine visits must follow the stage order") {
  Instance inst;
  inst.stages = {
      {0, StageKind::BaseDispatch, false},
      {1, StageKind::Job, false},
      {2, StageKind::Machine, true},
      {3, StageKind::Machine, true},
      {4, StageKind::BaseReceive, false},
  };
  inst.machines = {
      {"lab_a", 2, {50.0, 0.0}, 3, 2, true, 0, 1},
      {"lab_b", 3, {70.0, 0.0}, 3, 2, true, 0, 1},
  };
  inst.bases = {{"b0", -1, {0.0, 0.0}, 2, 1, true, 2, 2}};
  inst.jobs = {{"j0", {30.0, 0.0}, 0, std::nullopt, {}}};
  inst.transporter = {1e9, 10.0, 1.0};
  inst.weights = {1.0, 1.0, 1, 0.0};
  inst.delta_t = 1.0;
  inst.finalize();

  // In order: [d, d+5, d+7, d+12, d+22], both labs visited.
  Schedule good = one_shot(
      {raw_candidate({"b0", "j0", "lab_a", "lab_b", "b0"}, {0, 5, 7, 12, 22}, "j0", 140.0, 24)});
  CHECK(validate(inst, good).feasible());

  SUBCASE("stage order reversed") {
    Schedule s = one_shot(
        {raw_candidate({"b0", "j0", "lab_b", "lab_a", "b0"}, {0, 5, 9, 14, 22}, "j0", 160.0, 24)});
    Report rep = validate(inst, s);
    REQUIRE(families(rep).count("route-shape") == 1);
    CHECK(rep.violations[0].detail.find("stage order") != std::string::npos);
  }

  SUBCASE("a skipping job must not visit the skipped stage") {
    inst.jobs = {{"j0", {30.0, 0.0}, 0, std::nullopt, {3}}};
    inst.finalize();
    // Without lab_b: [0, 5, 7, 15], energy 30+20+50.
    Schedule ok =
        one_shot({raw_candidate({"b0", "j0", "lab_a", "b0"}, {0, 5, 7, 15}, "j0", 100.0, 17)});
    CHECK(validate(inst, ok).feasible());

    Schedule s = one_shot(
        {raw_candidate({"b0", "j0", "lab_a", "lab_b", "b0"}, {0, 5, 7, 12, 22}, "j0", 140.0, 24)});
    Report rep = validate(inst, s);
    REQUIRE(families(rep).count("route-shape") == 1);
    CHECK(rep.violations[0].detail.find("stage plan") != std::string::npos);
  }
}

TEST_CASE("optimizer output stays clean across random instances") {
  // Differential check: the optimizer builds schedules from interval
  // constraint programs; the validator replays them tick by tick with
  // none of that code. Any disagreement is a bug in one of the two.
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    Rng rng(1000 + seed);
    Instance inst;
    const int machine_stages = 1 + static_cast<int>(rng.index(2));
    inst.stages.push_back({0, StageKind::BaseDispatch, false});
    inst.stages.push_back({1, StageKind::Job, false});
    for (int s = 0; s < machine_stages; ++s) {
      inst.stages.push_back({2 + s, StageKind::Machine, true});
    }
    inst.stages.push_back({2 + machine_stages, StageKind::BaseReceive, false});

    const int n_bases = 1 + static_cast<int>(rng.index(2));
    for (int b = 0; b < n_bases; ++b) {
      Facility base;
      base.id = "b" + std::to_string(b);
      base.location = {rng.uniform(0.0, 300.0), rng.uniform(0.0, 300.0)};
      base.processing_time = 1 + static_cast<int>(rng.index(3));
      base.initial_transporters =
          b == 0 ? 1 + static_cast<int>(rng.index(2)) : static_cast<int>(rng.index(3));
      base.storage_capacity = base.initial_transporters + 2 + static_cast<int>(rng.index(2));
      inst.bases.push_back(base);
    }
    for (int s = 0; s < machine_stages; ++s) {
      const int n_m = 1 + static_cast<int>(rng.index(2));
      for (int m = 0; m < n_m; ++m) {
        Facility mach;
        mach.id = "m" + std::to_string(s) + "_" + std::to_string(m);
        mach.stage = 2 + s;
        mach.location = {rng.uniform(0.0, 300.0), rng.uniform(0.0, 300.0)};
        mach.processing_time = 2 + static_cast<int>(rng.index(5));
        mach.capacity = 1 + static_cast<int>(rng.index(2));
        mach.attached = rng.index(2) == 0;
        inst.machines.push_back(mach);
      }
    }
    const int n_jobs = 2 + static_cast<int>(rng.index(4));
    for (int j = 0; j < n_jobs; ++j) {
      Job job;
      job.id = "j" + std::to_string(j);
      job.location = {rng.uniform(0.0, 300.0), rng.uniform(0.0, 300.0)};
      job.processing_time = static_cast<int>(rng.index(3));
      if (rng.index(3) == 0) job.due_time = static_cast<Tick>(rng.index(60));
      if (machine_stages == 2 && rng.index(3) == 0) job.skip_stages = {3};
      inst.jobs.push_back(job);
    }
    inst.transporter = {1e9, 10.0, 1.0};
    inst.weights = {1.0, 1.0, 1 + static_cast<int>(rng.index(2)),
                    rng.index(2) == 0 ? 0.0 : 0.5};
    inst.delta_t = 1.0;
    inst.finalize();

    OptimizerConfig cfg;
    cfg.n_select = 1 + static_cast<int>(rng.index(2));
    cfg.n_clusters = static_cast<int>(rng.index(3));
    // Sized like a real deployment: the window covers a full route, the
    // stride keeps each segment's program at a few dozen columns per job.
    cfg.tau_h = 60 + static_cast<Tick>(rng.index(60));
    cfg.gamma = rng.uniform();
    cfg.dispatch_stride = 2 + static_cast<int>(rng.index(3));
    cfg.p_max = 2;
    cfg.max_stall_retries = 5;
    cfg.rng_seed = seed;

    Schedule s = run(inst, cfg);
    REQUIRE_MESSAGE(s.accepted.size() >= static_cast<std::size_t>(n_jobs),
                    "seed " << seed << ": not every job was scheduled");
    Report rep = validate(inst, s);
    REQUIRE_MESSAGE(rep.feasible(),
                    "seed " << seed << ": " << report_to_json(rep));
  }
}

TEST_CASE("reports serialize with their verdict") {
  Report rep;
  CHECK(report_to_json(rep).find("\"feasible\": true") != std::string::npos);

  rep.violations.push_back({"timing", 9, "j0", "stop 2 expected tick 8"});
  const std::string text = report_to_json(rep);
  auto j = nlohmann::json::parse(text);
  CHECK(j["format_version"] == 1);
  CHECK(j["feasible"] == false);
  REQUIRE(j["violations"].size() == 1);
  CHECK(j["violations"][0]["constraint"] == "timing");
  CHECK(j["violations"][0]["tick"] == 9);
  CHECK(j["violations"][0]["facility"] == "j0");
  CHECK(j["violations"][0]["detail"] == "stop 2 expected tick 8");
}
