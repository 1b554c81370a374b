#include "core/candidates.hpp"

#include <vector>

#include "doctest.h"

using namespace ssched;

namespace {

// Five-stop route with mixed processing: pt = (1,0,4,0,5), attached at every
// stop except the third, leg travel (2,3,1,2).
Path mixed_path() {
  Path p;
  p.sequence = {
      {"b0", StageKind::BaseDispatch, 0, {0, 0}, 1, true},
      {"job", StageKind::Job, 0, {1, 0}, 0, true},
      {"mA", StageKind::Machine, 0, {2, 0}, 4, false},
      {"mB", StageKind::Machine, 1, {3, 0}, 0, true},
      {"b1", StageKind::BaseReceive, 1, {4, 0}, 5, true},
  };
  p.leg_times = {2, 3, 1, 2};
  p.leg_energies = {1.0, 1.0, 1.0, 1.0};
  p.total_energy = 4.0;
  return p;
}

}  // namespace

TEST_CASE("arrival times follow the dispatch recurrence") {
  // t1 = 0+2+1, t2 = 3+3+0, t3 = 6+1 (detached stop adds no wait),
  // t4 = 7+2+0; finished once the receive base's 5-tick pt elapses.
  std::vector<Candidate> cs = generate_candidates({mixed_path()}, {0, 0});
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].times == std::vector<Tick>{0, 3, 6, 7, 9});
  CHECK(cs[0].finish == 14);
  CHECK(cs[0].energy == doctest::Approx(4.0));
  CHECK(cs[0].job_id == "job");
  CHECK_FALSE(cs[0].is_relocation());
}

TEST_CASE("window sweep emits one candidate per tick") {
  std::vector<Candidate> cs = generate_candidates({mixed_path()}, {0, 4});
  REQUIRE(cs.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(cs[i].dispatch_tick() == i);
    CHECK(cs[i].var_id == i);
  }
}

TEST_CASE("dispatch shift translates every arrival uniformly") {
  std::vector<Candidate> cs = generate_candidates({mixed_path()}, {0, 9});
  const Candidate& base = cs[0];
  for (const Candidate& c : cs) {
    const Tick delta = c.dispatch_tick() - base.dispatch_tick();
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      CHECK(c.times[i] == base.times[i] + delta);
    }
    CHECK(c.finish - c.dispatch_tick() == base.finish);  // duration is path-constant
  }
}

TEST_CASE("stride thins the dispatch grid") {
  std::vector<Candidate> cs = generate_candidates({mixed_path()}, {0, 9}, 3);
  REQUIRE(cs.size() == 4);
  CHECK(cs[0].dispatch_tick() == 0);
  CHECK(cs[1].dispatch_tick() == 3);
  CHECK(cs[2].dispatch_tick() == 6);
  CHECK(cs[3].dispatch_tick() == 9);
}

TEST_CASE("variable ids run path-major from the given origin") {
  Path a = mixed_path();
  Path b = mixed_path();
  b.sequence[2].id = "mC";
  std::vector<Candidate> cs = generate_candidates({a, b}, {5, 7}, 1, 100);
  REQUIRE(cs.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(cs[i].var_id == 100 + i);
  CHECK(cs[0].path->sequence[2].id == "mA");
  CHECK(cs[3].path->sequence[2].id == "mC");
  CHECK(cs[0].path.get() == cs[2].path.get());  // one shared path per source
}

TEST_CASE("relocation paths make job-less candidates") {
  Path reloc;
  reloc.sequence = {
      {"b0", StageKind::BaseDispatch, 0, {0, 0}, 2, true},
      {"b1", StageKind::BaseReceive, 1, {100, 0}, 2, true},
  };
  reloc.leg_times = {10};
  reloc.leg_energies = {100.0};
  reloc.total_energy = 100.0;
  std::vector<Candidate> cs = generate_candidates({reloc}, {3, 3});
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].is_relocation());
  CHECK(cs[0].times == std::vector<Tick>{3, 15});  // 3 + travel 10 + source pt 2
  CHECK(cs[0].finish == 17);
}

TEST_CASE("bad windows and strides are rejected") {
  CHECK_THROWS_AS(generate_candidates({mixed_path()}, {5, 4}), InputError);
  CHECK_THROWS_AS(generate_candidates({mixed_path()}, {-1, 4}), InputError);
  CHECK_THROWS_AS(generate_candidates({mixed_path()}, {0, 4}, 0), InputError);
}
