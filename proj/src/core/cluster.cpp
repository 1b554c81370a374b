#include "core/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/rng.hpp"

namespace ssched {

namespace {

double dist2(Location a, Location b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace

int ClusterState::total_unassigned() const {
  int total = 0;
  for (const auto& pool : unassigned) total += static_cast<int>(pool.size());
  return total;
}

void ClusterState::mark_assigned(std::string_view job_id) {
  auto it = membership.find(job_id);
  if (it == membership.end()) throw InputError("mark_assigned: unknown job id '" + std::string(job_id) + "'");
  auto& pool = unassigned[it->second];
  auto pit = pool.find(job_id);
  if (pit == pool.end()) throw InputError("mark_assigned: job '" + std::string(job_id) + "' already assigned");
  pool.erase(pit);
}

ClusterState cluster_jobs(const std::vector<Job>& jobs, int n_clusters, std::uint64_t rng_seed) {
  const int n = static_cast<int>(jobs.size());
  if (n == 0) throw InputError("cluster_jobs: no jobs");
  if (n_clusters < 1 || n_clusters > n) {
    throw InputError("cluster_jobs: n_clusters must be in [1, |jobs|]");
  }

  Rng rng(rng_seed);
  std::vector<Location> centroids;
  centroids.reserve(n_clusters);
  centroids.push_back(jobs[rng.index(static_cast<std::uint64_t>(n))].location);

  // Farthest-point seeding: each new seed maximizes the distance to its
  // nearest already-chosen seed.
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centroids.size()) < n_clusters) {
    int best = 0;
    double best_d = -1.0;
    for (int i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], dist2(jobs[i].location, centroids.back()));
      if (nearest[i] > best_d) {
        best_d = nearest[i];
        best = i;
      }
    }
    centroids.push_back(jobs[best].location);
  }

  std::vector<int> assign(n, 0);
  for (int round = 0; round < 100; ++round) {
    for (int i = 0; i < n; ++i) {
      int c = 0;
      double d = dist2(jobs[i].location, centroids[0]);
      for (int k = 1; k < n_clusters; ++k) {
        const double dk = dist2(jobs[i].location, centroids[k]);
        if (dk < d) {
          d = dk;
          c = k;
        }
      }
      assign[i] = c;
    }

    std::vector<double> sx(n_clusters, 0.0), sy(n_clusters, 0.0);
    std::vector<int> cnt(n_clusters, 0);
    for (int i = 0; i < n; ++i) {
      sx[assign[i]] += jobs[i].location.x;
      sy[assign[i]] += jobs[i].location.y;
      ++cnt[assign[i]];
    }
    double shift = 0.0;
    for (int k = 0; k < n_clusters; ++k) {
      if (cnt[k] == 0) continue;  // empty cluster keeps its centroid
      Location next{sx[k] / cnt[k], sy[k] / cnt[k]};
      shift = std::max(shift, std::sqrt(dist2(centroids[k], next)));
      centroids[k] = next;
    }
    if (shift < 1e-9) break;
  }

  ClusterState state;
  state.n_clusters = n_clusters;
  state.centroids = std::move(centroids);
  state.unassigned.resize(n_clusters);
  for (int i = 0; i < n; ++i) {
    state.membership[jobs[i].id] = assign[i];
    state.unassigned[assign[i]].insert(jobs[i].id);
    state.locations[jobs[i].id] = jobs[i].location;
  }
  return state;
}

double within_cluster_ss(const ClusterState& state) {
  double total = 0.0;
  for (const auto& [id, cluster] : state.membership) {
    total += dist2(state.locations.at(id), state.centroids[cluster]);
  }
  return total;
}

int suggest_n_clusters(const std::vector<Job>& jobs, int k_max) {
  if (k_max < 1) throw InputError("suggest_n_clusters: k_max must be >= 1");
  if (jobs.empty()) throw InputError("suggest_n_clusters: no jobs");
  const int kcap = std::min<int>(k_max, static_cast<int>(jobs.size()));
  if (kcap <= 2) return 1;

  constexpr std::uint64_t kElbowSeed = 0;
  std::vector<double> w(kcap + 1, 0.0);
  for (int k = 1; k <= kcap; ++k) {
    w[k] = within_cluster_ss(cluster_jobs(jobs, k, kElbowSeed));
  }

  auto d2 = [&](int k) {
    const int mid = std::clamp(k, 2, kcap - 1);  // one-sided at the ends
    return w[mid - 1] - 2.0 * w[mid] + w[mid + 1];
  };
  int best = 1;
  double best_d2 = d2(1);
  for (int k = 2; k <= kcap; ++k) {
    if (d2(k) > best_d2) {
      best_d2 = d2(k);
      best = k;
    }
  }
  return best;
}

std::vector<std::string> select(const ClusterState& state, int n_select) {
  if (n_select < 1) throw InputError("select: n_select must be >= 1");
  const long long total = state.total_unassigned();
  if (total == 0) return {};
  const long long take = std::min<long long>(n_select, total);

  // Largest-remainder apportionment in exact integer arithmetic.
  const int nc = state.n_clusters;
  std::vector<long long> quota(nc, 0), rem(nc, 0);
  long long assigned = 0;
  for (int c = 0; c < nc; ++c) {
    const long long num = take * static_cast<long long>(state.unassigned[c].size());
    quota[c] = num / total;
    rem[c] = num % total;
    assigned += quota[c];
  }
  std::vector<int> order(nc);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (int i = 0; assigned < take; ++i) {
    ++quota[order[i]];
    ++assigned;
  }

  std::vector<std::string> picked;
  picked.reserve(take);
  for (int c = 0; c < nc; ++c) {
    if (quota[c] == 0) continue;
    std::vector<std::pair<double, std::string_view>> ranked;
    ranked.reserve(state.unassigned[c].size());
    for (const auto& id : state.unassigned[c]) {
      ranked.emplace_back(dist2(state.locations.at(id), state.centroids[c]), id);
    }
    std::sort(ranked.begin(), ranked.end());
    for (long long i = 0; i < quota[c]; ++i) picked.emplace_back(ranked[i].second);
  }
  return picked;
}

}  // namespace ssched
