#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "core/instance.hpp"

namespace ssched {

// Spatial grouping of jobs plus the not-yet-scheduled pool per group. The
// optimizer draws a location-diverse batch from this every segment and
// removes jobs only once a segment actually schedules them.
struct ClusterState {
  int n_clusters = 1;
  std::vector<Location> centroids;
  std::map<std::string, int, std::less<>> membership;      // job id -> cluster
  std::vector<std::set<std::string, std::less<>>> unassigned;  // per cluster
  std::map<std::string, Location, std::less<>> locations;  // job id -> location

  int total_unassigned() const;

  // Drops the job from its cluster's unassigned pool. Throws InputError if
  // the id is unknown or already assigned.
  void mark_assigned(std::string_view job_id);
};

// Lloyd's algorithm over job locations. Seeding is farthest-point: the first
// centroid is a seed-chosen job, each further centroid the job maximizing the
// distance to its nearest chosen seed (tie: smaller job index). Iterates to
// convergence (max centroid shift < 1e-9) or 100 rounds; assignment ties go
// to the smaller cluster index; a cluster left empty keeps its centroid.
// Deterministic for a fixed seed. All jobs start unassigned.
ClusterState cluster_jobs(const std::vector<Job>& jobs, int n_clusters, std::uint64_t rng_seed);

// Sum of squared distances from each job to its cluster centroid.
double within_cluster_ss(const ClusterState& state);

// Discrete elbow over k = 1..min(k_max, |jobs|): picks the k with the largest
// second difference of the WCSS curve, ties to the smallest k. The boundary
// second differences are one-sided, which makes d2(1) equal d2(2); with the
// smallest-k tie rule a flat-beyond-1 curve therefore yields 1. Fewer than
// three sampled k values carry no curvature signal and also yield 1.
int suggest_n_clusters(const std::vector<Job>& jobs, int k_max);

// Draws min(n_select, total unassigned) jobs: per-cluster quotas by
// largest-remainder apportionment proportional to unassigned counts
// (remainder ties to the lower cluster index), then the quota nearest-to-
// centroid jobs within each cluster (distance ties to the smaller id).
// Returned grouped by cluster index, nearest first. Does not mark anything
// assigned; repeated calls return the same list.
std::vector<std::string> select(const ClusterState& state, int n_select);

}  // namespace ssched
