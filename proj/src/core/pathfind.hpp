#pragma once

#include <string>
#include <vector>

#include "core/instance.hpp"

namespace ssched {

// One stop on a route. `ref` indexes instance.bases, .machines or .jobs
// depending on kind.
struct PathNode {
  std::string id;
  StageKind kind = StageKind::Machine;
  int ref = -1;
  Location loc{};
  Tick pt = 0;
  bool attached = true;
};

// A facility route for one job (dispatch base, job, machines, receive base)
// or a two-node base-to-base transporter relocation. Only energy-feasible
// paths (total_energy < e_max) are ever constructed.
struct Path {
  std::vector<PathNode> sequence;
  std::vector<Tick> leg_times;       // size |sequence|-1
  std::vector<double> leg_energies;  // size |sequence|-1
  double total_energy = 0.0;

  // Ticks from dispatch to arrival at the final node: travel plus every
  // intermediate attended stop (pt counts only while the transporter stays).
  Tick duration() const;

  // duration plus the final node's pt: the transporter is back in service
  // (and a job is finished) only after the receiving base processes it.
  Tick finish_offset() const;
};

// Layered route graph for one job: virtual start, dispatch bases, the job,
// machines per non-skipped stage, receive bases, virtual end. Node indices
// are assigned layer by layer, so index order is topological.
struct JobGraph {
  enum class NodeKind { Start, Dispatch, Job, Machine, Receive, End };

  struct Node {
    NodeKind kind = NodeKind::Start;
    std::string id;
    int ref = -1;
    Location loc{};
    Tick pt = 0;
    bool attached = true;
  };

  struct Edge {
    int from = 0;
    int to = 0;
    Tick tt = 0;
    double te = 0.0;
  };

  std::string job_id;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<std::vector<int>> out;  // edge indices by from-node
  int start = 0;
  int end = 0;
};

// Builds the complete bipartite layering between consecutive effective
// stages; stages in job.skip_stages are bridged over. Edges to/from the
// virtual endpoints cost (0,0).
JobGraph build_job_graph(const Instance& instance, const Job& job);

struct PathSearchResult {
  std::vector<Path> paths;
  bool warning = false;      // fewer than p_min paths exist
  std::string warning_text;  // human-readable reason when warning is set
};

// Enumerates up to p_max facility-disjoint energy-feasible routes. The first
// is the minimum-energy start-to-end path (ties: smaller total travel time,
// then lexicographically smaller id sequence). Further routes come from
// re-searching after deleting one machine/base node per already-found path,
// sweeping those deletion combinations lexicographically (earlier path =
// more significant axis, nodes in path order); the job node and the virtual
// endpoints are never deleted. A duplicate of an already-found route is
// skipped. Deterministic. A fixed sweep budget caps the combination count so
// an effectively unbounded p_max cannot spin forever.
PathSearchResult find_disjoint_paths(const JobGraph& graph, double e_max, int p_min, int p_max);

// Direct base-to-base transporter transfers: for every ordered pair of
// distinct bases, the two-node path dispatch(b) -> receive(b') when its
// energy is under e_max. These carry no job; the receiving end recharges the
// transporter (its pt applies) before it can go out again.
std::vector<Path> relocation_paths(const Instance& instance, double e_max);

}  // namespace ssched
