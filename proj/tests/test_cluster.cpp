#include "core/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "doctest.h"

using namespace ssched;

namespace {

Job job_at(std::string id, double x, double y) {
  Job j;
  j.id = std::move(id);
  j.location = {x, y};
  return j;
}

double d2(Location a, Location b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Exact minimum WCSS over every assignment of the jobs to at most k
// clusters. Exponential; keep |jobs| small.
double brute_force_wcss(const std::vector<Job>& jobs, int k) {
  const int n = static_cast<int>(jobs.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> assign(n, 0);
  long long combos = 1;
  for (int i = 0; i < n; ++i) combos *= k;
  for (long long code = 0; code < combos; ++code) {
    long long c = code;
    for (int i = 0; i < n; ++i) {
      assign[i] = static_cast<int>(c % k);
      c /= k;
    }
    double total = 0.0;
    for (int cl = 0; cl < k; ++cl) {
      double sx = 0, sy = 0;
      int cnt = 0;
      for (int i = 0; i < n; ++i) {
        if (assign[i] != cl) continue;
        sx += jobs[i].location.x;
        sy += jobs[i].location.y;
        ++cnt;
      }
      if (cnt == 0) continue;
      const Location mean{sx / cnt, sy / cnt};
      for (int i = 0; i < n; ++i) {
        if (assign[i] == cl) total += d2(jobs[i].location, mean);
      }
    }
    best = std::min(best, total);
  }
  return best;
}

// Three point clouds of exact duplicates near an equilateral triangle. Four
// copies per corner so k_max up to 6 stays within |jobs|.
std::vector<Job> three_clouds() {
  std::vector<Job> jobs;
  const Location corners[3] = {{0.0, 0.0}, {1000.0, 0.0}, {500.0, 866.0}};
  int id = 0;
  for (const Location& c : corners) {
    for (int i = 0; i < 4; ++i) {
      jobs.push_back(job_at("j" + std::to_string(id++), c.x, c.y));
    }
  }
  return jobs;
}

}  // namespace

TEST_CASE("one cluster per job pins centroids to the job locations") {
  std::vector<Job> jobs = {job_at("a", 0, 0), job_at("b", 10, 0), job_at("c", 0, 10),
                           job_at("d", 7, 7)};
  ClusterState st = cluster_jobs(jobs, 4, 1);
  std::set<int> seen;
  for (const Job& j : jobs) {
    const int c = st.membership.at(j.id);
    seen.insert(c);
    CHECK(st.centroids[c].x == j.location.x);
    CHECK(st.centroids[c].y == j.location.y);
    CHECK(st.unassigned[c].count(j.id) == 1);
  }
  CHECK(seen.size() == 4);
}

TEST_CASE("single cluster centroid is the mean location") {
  std::vector<Job> jobs = {job_at("a", 0, 0), job_at("b", 10, 0), job_at("c", 2, 9)};
  ClusterState st = cluster_jobs(jobs, 1, 3);
  CHECK(st.centroids[0].x == doctest::Approx(4.0));
  CHECK(st.centroids[0].y == doctest::Approx(3.0));
  CHECK(st.total_unassigned() == 3);
}

TEST_CASE("two separated groups split exactly at k=2") {
  // Eight points, two compact groups far apart. Brute force gives the
  // optimal 2-means cost; the heuristic must reach it and keep the groups.
  std::vector<Job> jobs = {job_at("a0", 0, 0),     job_at("a1", 3, 1),   job_at("a2", -2, 2),
                           job_at("a3", 1, -3),    job_at("b0", 500, 0), job_at("b1", 503, -2),
                           job_at("b2", 498, 4),   job_at("b3", 501, 1)};
  const double optimal = brute_force_wcss(jobs, 2);
  for (std::uint64_t seed : {0ull, 1ull, 42ull}) {
    ClusterState st = cluster_jobs(jobs, 2, seed);
    CHECK(within_cluster_ss(st) == doctest::Approx(optimal));
    const int ca = st.membership.at("a0");
    const int cb = st.membership.at("b0");
    CHECK(ca != cb);
    for (const char* id : {"a1", "a2", "a3"}) CHECK(st.membership.at(id) == ca);
    for (const char* id : {"b1", "b2", "b3"}) CHECK(st.membership.at(id) == cb);
  }
}

TEST_CASE("clustering is deterministic for a fixed seed") {
  std::vector<Job> jobs;
  Rng rng(77);
  for (int i = 0; i < 40; ++i) {
    jobs.push_back(job_at("j" + std::to_string(i), rng.uniform(0, 1000), rng.uniform(0, 1000)));
  }
  ClusterState a = cluster_jobs(jobs, 5, 9);
  ClusterState b = cluster_jobs(jobs, 5, 9);
  CHECK(a.membership == b.membership);
  for (int k = 0; k < 5; ++k) {
    CHECK(a.centroids[k].x == b.centroids[k].x);
    CHECK(a.centroids[k].y == b.centroids[k].y);
  }
}

TEST_CASE("elbow suggestion") {
  SUBCASE("single tight cloud suggests one cluster") {
    std::vector<Job> dup;
    for (int i = 0; i < 8; ++i) dup.push_back(job_at("j" + std::to_string(i), 50, 50));
    CHECK(suggest_n_clusters(dup, 5) == 1);

    std::vector<Job> tight;
    Rng rng(5);
    for (int i = 0; i < 12; ++i) {
      tight.push_back(
          job_at("j" + std::to_string(i), 500 + rng.uniform(-1, 1), 500 + rng.uniform(-1, 1)));
    }
    CHECK(suggest_n_clusters(tight, 6) == 1);
  }

  SUBCASE("three separated clouds suggest three") {
    std::vector<Job> jobs = three_clouds();

    // Duplicate points are never split by an optimal clustering, so the
    // exact WCSS curve comes from the five partitions of the three corners.
    const Location A{0, 0}, B{1000, 0}, C{500, 866};
    auto merged = [&](std::initializer_list<Location> group) {
      double sx = 0, sy = 0;
      for (Location l : group) { sx += l.x; sy += l.y; }
      const Location mean{sx / group.size(), sy / group.size()};
      double total = 0;
      for (Location l : group) total += 4.0 * d2(l, mean);
      return total;
    };
    const double w1 = merged({A, B, C});
    const double w2 = std::min({merged({A, B}), merged({A, C}), merged({B, C})});
    std::vector<double> expected = {w1, w2, 0.0, 0.0, 0.0, 0.0};
    for (int k = 1; k <= 6; ++k) {
      CHECK(within_cluster_ss(cluster_jobs(jobs, k, 0)) == doctest::Approx(expected[k - 1]));
    }
    CHECK(suggest_n_clusters(jobs, 6) == 3);
  }

  SUBCASE("degenerate sizes suggest one") {
    CHECK(suggest_n_clusters({job_at("only", 3, 4)}, 4) == 1);
    CHECK(suggest_n_clusters({job_at("p", 0, 0), job_at("q", 9, 9)}, 5) == 1);
  }
}

TEST_CASE("selection apportions by largest remainder") {
  // Unassigned counts (6, 3, 1): quotas for five picks are (3, 2, 0). The
  // exact shares are 3.0, 1.5, 0.5; the leftover pick goes to the 0.5-vs-0.5
  // remainder tie, broken to the lower cluster index. Built by hand so the
  // cluster indices are pinned.
  ClusterState st;
  st.n_clusters = 3;
  st.centroids = {{0, 0}, {1000, 0}, {2000, 0}};
  st.unassigned.resize(3);
  auto add = [&st](const std::string& id, int cluster, double x) {
    st.membership[id] = cluster;
    st.unassigned[cluster].insert(id);
    st.locations[id] = {x, 0};
  };
  for (int i = 0; i < 6; ++i) add("a" + std::to_string(i), 0, i);
  for (int i = 0; i < 3; ++i) add("b" + std::to_string(i), 1, 1000 + i);
  add("c0", 2, 2000);

  std::vector<std::string> picked = select(st, 5);
  REQUIRE(picked.size() == 5);
  std::map<int, int> per_cluster;
  for (const auto& id : picked) ++per_cluster[st.membership.at(id)];
  CHECK(per_cluster[0] == 3);
  CHECK(per_cluster[1] == 2);
  CHECK(per_cluster[2] == 0);
}

TEST_CASE("selection within one cluster is nearest to centroid with id ties") {
  // Centroid is the mean (10, 12.5). Distances: near 2.5, p = q ~12.66,
  // far 27.5. The p/q tie is broken by id.
  std::vector<Job> jobs = {job_at("p", 8, 0), job_at("q", 12, 0), job_at("far", 10, 40),
                           job_at("near", 10, 10)};
  ClusterState st = cluster_jobs(jobs, 1, 0);
  REQUIRE(st.centroids[0].x == doctest::Approx(10.0));
  REQUIRE(st.centroids[0].y == doctest::Approx(12.5));

  std::vector<std::string> two = select(st, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == "near");
  CHECK(two[1] == "p");

  std::vector<std::string> three = select(st, 3);
  REQUIRE(three.size() == 3);
  CHECK(three[2] == "q");

  std::vector<std::string> all = select(st, 99);
  CHECK(all.size() == 4);  // n_select beyond the pool returns everything
}

TEST_CASE("selection skips assigned jobs and repeats deterministically") {
  std::vector<Job> jobs;
  Rng rng(123);
  for (int i = 0; i < 30; ++i) {
    jobs.push_back(job_at("j" + std::to_string(i), rng.uniform(0, 100), rng.uniform(0, 100)));
  }
  ClusterState st = cluster_jobs(jobs, 4, 2);

  std::vector<std::string> first = select(st, 10);
  CHECK(select(st, 10) == first);  // no intervening assignment

  for (const auto& id : first) st.mark_assigned(id);
  CHECK(st.total_unassigned() == 20);
  std::vector<std::string> second = select(st, 10);
  for (const auto& id : second) {
    CHECK(std::find(first.begin(), first.end(), id) == first.end());
  }

  // Quota properties over a sweep of n_select.
  for (int ns = 1; ns <= 25; ++ns) {
    std::vector<std::string> got = select(st, ns);
    CHECK(static_cast<int>(got.size()) == std::min(ns, st.total_unassigned()));
    std::map<int, int> per_cluster;
    for (const auto& id : got) ++per_cluster[st.membership.at(id)];
    for (const auto& [c, cnt] : per_cluster) {
      CHECK(cnt <= static_cast<int>(st.unassigned[c].size()));
    }
  }

  CHECK_THROWS_AS(st.mark_assigned(first[0]), InputError);  // double assignment
  CHECK_THROWS_AS(st.mark_assigned("nope"), InputError);
}

TEST_CASE("cluster_jobs rejects bad cluster counts") {
  std::vector<Job> jobs = {job_at("a", 0, 0), job_at("b", 1, 1)};
  CHECK_THROWS_AS(cluster_jobs(jobs, 0, 0), InputError);
  CHECK_THROWS_AS(cluster_jobs(jobs, 3, 0), InputError);
  CHECK(select(cluster_jobs(jobs, 1, 0), 1).size() == 1);
}
