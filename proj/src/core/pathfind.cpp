#include "core/pathfind.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>

namespace ssched {

namespace {

// Total combination sweeps allowed per find_disjoint_paths call. Keeps an
// unbounded p_max from exploding combinatorially on dense graphs.
constexpr long long kSweepBudget = 1'000'000;

StageKind to_stage_kind(JobGraph::NodeKind k) {
  switch (k) {
    case JobGraph::NodeKind::Dispatch: return StageKind::BaseDispatch;
    case JobGraph::NodeKind::Job: return StageKind::Job;
    case JobGraph::NodeKind::Machine: return StageKind::Machine;
    case JobGraph::NodeKind::Receive: return StageKind::BaseReceive;
    default: throw InputError("virtual node has no stage kind");
  }
}

}  // namespace

Tick Path::duration() const {
  Tick total = 0;
  for (Tick tt : leg_times) total += tt;
  for (std::size_t i = 0; i + 1 < sequence.size(); ++i) {
    if (sequence[i].attached) total += sequence[i].pt;
  }
  return total;
}

Tick Path::finish_offset() const { return duration() + sequence.back().pt; }

JobGraph build_job_graph(const Instance& instance, const Job& job) {
  for (int s : job.skip_stages) {
    if (s < 2 || s + 1 >= instance.stage_count() ||
        instance.stages[s].kind != StageKind::Machine || !instance.stages[s].skippable) {
      throw InputError("job '" + job.id + "' skips stage " + std::to_string(s) +
                       " which is not a skippable machine stage");
    }
  }

  JobGraph g;
  g.job_id = job.id;

  std::vector<std::vector<int>> layers;
  auto add_node = [&g](JobGraph::Node n) {
    g.nodes.push_back(std::move(n));
    return static_cast<int>(g.nodes.size() - 1);
  };
  auto add_layer = [&layers](std::vector<int> nodes) { layers.push_back(std::move(nodes)); };

  g.start = add_node({JobGraph::NodeKind::Start, "~start", -1, {}, 0, true});
  add_layer({g.start});

  std::vector<int> dispatch;
  for (std::size_t b = 0; b < instance.bases.size(); ++b) {
    const Facility& base = instance.bases[b];
    dispatch.push_back(add_node({JobGraph::NodeKind::Dispatch, base.id, static_cast<int>(b),
                                 base.location, base.processing_time, true}));
  }
  add_layer(dispatch);

  const int job_node = add_node({JobGraph::NodeKind::Job, job.id, instance.job_index(job.id),
                                 job.location, job.processing_time, true});
  add_layer({job_node});

  for (int s = 2; s + 1 < instance.stage_count(); ++s) {
    if (std::find(job.skip_stages.begin(), job.skip_stages.end(), s) != job.skip_stages.end()) {
      continue;  // bridged: the previous layer connects straight to the next
    }
    std::vector<int> layer;
    for (int m : instance.machines_at(s)) {
      const Facility& mach = instance.machines[m];
      layer.push_back(add_node({JobGraph::NodeKind::Machine, mach.id, m, mach.location,
                                mach.processing_time, mach.attached}));
    }
    if (layer.empty()) {
      throw InputError("job '" + job.id + "': stage " + std::to_string(s) + " has no machines");
    }
    add_layer(std::move(layer));
  }

  std::vector<int> receive;
  for (std::size_t b = 0; b < instance.bases.size(); ++b) {
    const Facility& base = instance.bases[b];
    receive.push_back(add_node({JobGraph::NodeKind::Receive, base.id, static_cast<int>(b),
                                base.location, base.processing_time, true}));
  }
  add_layer(receive);

  g.end = add_node({JobGraph::NodeKind::End, "~end", -1, {}, 0, true});
  add_layer({g.end});

  auto add_edge = [&g](int from, int to, Tick tt, double te) {
    g.edges.push_back({from, to, tt, te});
  };
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    for (int u : layers[l]) {
      for (int v : layers[l + 1]) {
        const JobGraph::Node& a = g.nodes[u];
        const JobGraph::Node& b = g.nodes[v];
        if (a.kind == JobGraph::NodeKind::Start || b.kind == JobGraph::NodeKind::End) {
          add_edge(u, v, 0, 0.0);
        } else {
          Site sa{a.id, a.loc}, sb{b.id, b.loc};
          add_edge(u, v, instance.transport_ticks(sa, sb), instance.transport_energy(sa, sb));
        }
      }
    }
  }

  g.out.assign(g.nodes.size(), {});
  for (std::size_t e = 0; e < g.edges.size(); ++e) g.out[g.edges[e].from].push_back(static_cast<int>(e));
  return g;
}

namespace {

struct Label {
  double e = 0.0;
  long long t = 0;
  int pred_edge = -1;
  bool reached = false;
};

std::vector<std::string_view> chain_ids(const JobGraph& g, const std::vector<Label>& lab, int node) {
  std::vector<std::string_view> ids;
  for (int u = node; u != -1;) {
    ids.push_back(g.nodes[u].id);
    const int pe = lab[u].pred_edge;
    u = pe == -1 ? -1 : g.edges[pe].from;
  }
  std::reverse(ids.begin(), ids.end());
  return ids;
}

// Label-setting in node-index order (topological for this layered graph).
// Order on labels: energy, then travel time, then lexicographic id sequence.
// Returns the node chain start..end, or empty if unreachable.
std::vector<int> shortest_chain(const JobGraph& g, const std::vector<char>& removed) {
  std::vector<Label> lab(g.nodes.size());
  lab[g.start].reached = true;
  for (int u = 0; u < static_cast<int>(g.nodes.size()); ++u) {
    if (!lab[u].reached || removed[u]) continue;
    for (int ei : g.out[u]) {
      const JobGraph::Edge& e = g.edges[ei];
      if (removed[e.to]) continue;
      const double ne = lab[u].e + e.te;
      const long long nt = lab[u].t + e.tt;
      Label& cur = lab[e.to];
      bool better;
      if (!cur.reached) {
        better = true;
      } else if (ne != cur.e) {
        better = ne < cur.e;
      } else if (nt != cur.t) {
        better = nt < cur.t;
      } else {
        // Both chains are final (their nodes sit in lower layers).
        auto lhs = chain_ids(g, lab, u);
        lhs.push_back(g.nodes[e.to].id);
        better = lhs < chain_ids(g, lab, e.to);
      }
      if (better) cur = {ne, nt, ei, true};
    }
  }
  if (!lab[g.end].reached) return {};
  std::vector<int> chain;
  for (int u = g.end; u != -1;) {
    chain.push_back(u);
    const int pe = lab[u].pred_edge;
    u = pe == -1 ? -1 : g.edges[pe].from;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

Path path_from_chain(const JobGraph& g, const std::vector<int>& chain) {
  Path p;
  for (std::size_t i = 1; i + 1 < chain.size(); ++i) {
    const JobGraph::Node& n = g.nodes[chain[i]];
    p.sequence.push_back({n.id, to_stage_kind(n.kind), n.ref, n.loc, n.pt, n.attached});
  }
  // Edges between the real nodes; the virtual legs cost nothing.
  for (std::size_t i = 1; i + 2 < chain.size(); ++i) {
    for (int ei : g.out[chain[i]]) {
      const JobGraph::Edge& e = g.edges[ei];
      if (e.to == chain[i + 1]) {
        p.leg_times.push_back(e.tt);
        p.leg_energies.push_back(e.te);
        p.total_energy += e.te;
        break;
      }
    }
  }
  return p;
}

}  // namespace

PathSearchResult find_disjoint_paths(const JobGraph& graph, double e_max, int p_min, int p_max) {
  if (p_min < 1 || p_max < p_min) {
    throw InputError("find_disjoint_paths: need 1 <= p_min <= p_max");
  }

  PathSearchResult result;
  std::vector<std::vector<int>> found;      // node chains, for dedup
  std::vector<std::vector<int>> removable;  // per found path: deletable node indices
  std::map<std::vector<int>, std::vector<int>> memo;  // removal set -> chain ("" = none)
  long long budget = kSweepBudget;

  auto removable_of = [&graph](const std::vector<int>& chain) {
    std::vector<int> nodes;
    for (int u : chain) {
      const JobGraph::NodeKind k = graph.nodes[u].kind;
      if (k == JobGraph::NodeKind::Dispatch || k == JobGraph::NodeKind::Machine ||
          k == JobGraph::NodeKind::Receive) {
        nodes.push_back(u);
      }
    }
    return nodes;
  };

  while (static_cast<int>(found.size()) < p_max && budget > 0) {
    // Sweep every combination of one deleted node per found path; the empty
    // combination (nothing found yet) searches the intact graph.
    std::vector<std::size_t> digit(found.size(), 0);
    bool added = false;
    while (budget > 0) {
      --budget;
      std::vector<int> removal;
      for (std::size_t axis = 0; axis < digit.size(); ++axis) {
        removal.push_back(removable[axis][digit[axis]]);
      }
      std::sort(removal.begin(), removal.end());
      removal.erase(std::unique(removal.begin(), removal.end()), removal.end());

      auto it = memo.find(removal);
      if (it == memo.end()) {
        std::vector<char> removed(graph.nodes.size(), 0);
        for (int u : removal) removed[u] = 1;
        it = memo.emplace(std::move(removal), shortest_chain(graph, removed)).first;
      }
      const std::vector<int>& chain = it->second;
      if (!chain.empty() && std::find(found.begin(), found.end(), chain) == found.end()) {
        double energy = 0.0;
        for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
          for (int ei : graph.out[chain[i]]) {
            if (graph.edges[ei].to == chain[i + 1]) {
              energy += graph.edges[ei].te;
              break;
            }
          }
        }
        if (energy < e_max) {
          found.push_back(chain);
          removable.push_back(removable_of(chain));
          added = true;
          break;
        }
      }

      // Odometer step, last axis fastest; a fully swept product means no
      // further path exists under any single-deletion combination.
      if (digit.empty()) break;
      bool wrapped = true;
      for (std::size_t axis = digit.size(); axis-- > 0;) {
        if (++digit[axis] < removable[axis].size()) {
          wrapped = false;
          break;
        }
        digit[axis] = 0;
      }
      if (wrapped) break;
    }
    if (!added) break;
  }

  for (const auto& chain : found) result.paths.push_back(path_from_chain(graph, chain));
  if (static_cast<int>(result.paths.size()) < p_min) {
    result.warning = true;
    result.warning_text = result.paths.empty()
                              ? "no energy-feasible path exists for job '" + graph.job_id + "'"
                              : "only " + std::to_string(result.paths.size()) + " of " +
                                    std::to_string(p_min) + " requested paths exist for job '" +
                                    graph.job_id + "'";
  }
  return result;
}

std::vector<Path> relocation_paths(const Instance& instance, double e_max) {
  std::vector<Path> paths;
  for (std::size_t i = 0; i < instance.bases.size(); ++i) {
    for (std::size_t k = 0; k < instance.bases.size(); ++k) {
      if (i == k) continue;
      const Facility& from = instance.bases[i];
      const Facility& to = instance.bases[k];
      const double te = instance.transport_energy(site_of(from), site_of(to));
      if (te >= e_max) continue;
      Path p;
      p.sequence.push_back({from.id, StageKind::BaseDispatch, static_cast<int>(i), from.location,
                            from.processing_time, true});
      p.sequence.push_back({to.id, StageKind::BaseReceive, static_cast<int>(k), to.location,
                            to.processing_time, true});
      p.leg_times.push_back(instance.transport_ticks(site_of(from), site_of(to)));
      p.leg_energies.push_back(te);
      p.total_energy = te;
      paths.push_back(std::move(p));
    }
  }
  return paths;
}

}  // namespace ssched
