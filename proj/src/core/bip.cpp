#include "core/bip.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace ssched {

double candidate_cost(const Candidate& candidate, const Weights& weights,
                      std::optional<Tick> due_time) {
  if (candidate.is_relocation()) return weights.alpha * candidate.energy;
  double tf_pow = 1.0;
  for (int i = 0; i < weights.k_exponent; ++i) tf_pow *= static_cast<double>(candidate.finish);
  double cost = weights.alpha * candidate.energy + weights.beta * tf_pow;
  if (due_time && weights.zeta > 0.0) {
    const double lateness = static_cast<double>(candidate.times[1] - *due_time);
    cost += weights.zeta * lateness * lateness;
  }
  return cost;
}

BinaryProgram build_program(const std::vector<Candidate>& candidates,
                            const std::vector<Candidate>& fixed_schedule, TimeWindow window,
                            const Instance& instance) {
  const int n_fixed = static_cast<int>(fixed_schedule.size());
  const int n = n_fixed + static_cast<int>(candidates.size());
  for (int i = 0; i < n_fixed; ++i) {
    if (fixed_schedule[i].var_id != i) {
      throw InputError("build_program: fixed_schedule var ids must be 0..|fixed|-1 in order");
    }
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].var_id != n_fixed + static_cast<int>(i)) {
      throw InputError("build_program: candidate var ids must continue after the fixed block");
    }
  }

  auto at = [&](int v) -> const Candidate& {
    return v < n_fixed ? fixed_schedule[v] : candidates[v - n_fixed];
  };

  BinaryProgram p;
  p.n_vars = n;
  p.objective.assign(n, 0.0);
  for (int v = 0; v < n; ++v) {
    const Candidate& c = at(v);
    std::optional<Tick> due;
    if (!c.is_relocation()) due = instance.jobs[instance.job_index(c.job_id)].due_time;
    p.objective[v] = candidate_cost(c, instance.weights, due);
  }

  // Prior segments' picks stay picked.
  for (int v = 0; v < n_fixed; ++v) {
    p.fixed.emplace_back(v, 1);
    Constraint row;
    row.container.add(v);
    row.rel = Relation::Eq;
    row.bound = 1;
    row.tag = "fixity c" + std::to_string(v);
    p.constraints.push_back(std::move(row));
  }

  // Each job is served exactly once.
  std::map<std::string, std::vector<int>, std::less<>> by_job;
  for (int v = 0; v < n; ++v) {
    const Candidate& c = at(v);
    if (!c.is_relocation()) by_job[c.job_id].push_back(v);
  }
  for (const auto& [job_id, vars] : by_job) {
    Constraint row;
    for (int v : vars) row.container.add(v);
    row.rel = Relation::Eq;
    row.bound = 1;
    row.tag = "job " + job_id;
    p.constraints.push_back(std::move(row));
  }

  // Machine occupancy: a candidate holds its machine for [arrival,
  // arrival + pt] whether or not the transporter stays attached. Rows are
  // emitted at interval starts from this window on; a peak anywhere falls on
  // some interval start, and starts before the window were covered when
  // their own segment ran. Rows that cannot exceed capacity are dropped.
  std::map<int, std::vector<std::pair<std::pair<Tick, Tick>, int>>> machine_usage;
  for (int v = 0; v < n; ++v) {
    const Candidate& c = at(v);
    for (std::size_t i = 0; i < c.path->sequence.size(); ++i) {
      const PathNode& node = c.path->sequence[i];
      if (node.kind != StageKind::Machine) continue;
      machine_usage[node.ref].push_back({{c.times[i], c.times[i] + node.pt}, v});
    }
  }
  for (const auto& [m, intervals] : machine_usage) {
    const Facility& mach = instance.machines[m];
    std::set<Tick> ticks;
    for (const auto& [span, v] : intervals) {
      if (span.first >= window.start) ticks.insert(span.first);
    }
    for (Tick t : ticks) {
      Constraint row;
      for (const auto& [span, v] : intervals) {
        if (span.first <= t && t <= span.second) row.container.add(v);
      }
      if (static_cast<long long>(row.container.terms.size()) <= mach.capacity) continue;
      row.rel = Relation::Le;
      row.bound = mach.capacity;
      row.tag = "machine " + mach.id + " t" + std::to_string(t);
      p.constraints.push_back(std::move(row));
    }
  }

  // Base bookkeeping events per candidate: a dispatch consumes a transporter
  // at rho_0; the return occupies storage from arrival rho_last and is ready
  // to dispatch again pt(base) later.
  struct BaseEvents {
    std::vector<std::pair<Tick, int>> dispatches;  // (rho_0, var)
    std::vector<std::pair<Tick, int>> arrivals;    // (rho_last, var)
    std::vector<std::pair<Tick, int>> ready;       // (rho_last + pt, var)
  };
  std::vector<BaseEvents> events(instance.bases.size());
  for (int v = 0; v < n; ++v) {
    const Candidate& c = at(v);
    const PathNode& from = c.path->sequence.front();
    const PathNode& to = c.path->sequence.back();
    events[from.ref].dispatches.emplace_back(c.times.front(), v);
    events[to.ref].arrivals.emplace_back(c.times.back(), v);
    events[to.ref].ready.emplace_back(c.times.back() + to.pt, v);
  }

  // Fleet cap: a transporter is in flight from its dispatch until its
  // receiving base finishes recharging it, so at any tick at most
  // sum(A(b,0)) candidates can be in flight. Each row is the sum of the
  // per-base availability rows at that tick, hence implied; it is emitted
  // anyway because relocations cancel out of the sum, which lets a window
  // with too few transporters fail fast instead of after an exhaustive
  // search over relocation subsets.
  long long fleet = 0;
  for (const Facility& base : instance.bases) fleet += base.initial_transporters;
  std::vector<std::pair<Tick, Tick>> flight(n);  // [dispatch, ready)
  for (int v = 0; v < n; ++v) {
    const Candidate& c = at(v);
    flight[v] = {c.times.front(), c.times.back() + c.path->sequence.back().pt};
  }
  std::set<Tick> fleet_ticks{window.start};
  for (int v = 0; v < n; ++v) {
    if (window.contains(flight[v].first)) fleet_ticks.insert(flight[v].first);
  }
  for (Tick t : fleet_ticks) {
    Constraint row;
    for (int v = 0; v < n; ++v) {
      if (flight[v].first <= t && t < flight[v].second) row.container.sub(v);
    }
    if (static_cast<long long>(row.container.terms.size()) <= fleet) continue;
    row.rel = Relation::Ge;
    row.bound = -fleet;
    row.tag = "fleet t" + std::to_string(t);
    p.constraints.push_back(std::move(row));
  }

  for (std::size_t b = 0; b < instance.bases.size(); ++b) {
    const Facility& base = instance.bases[b];
    const BaseEvents& ev = events[b];

    // Availability: ready receipts minus dispatches so far never drop below
    // -initial stock. The tally only falls at dispatch ticks, all of which
    // lie inside the window.
    std::set<Tick> avail_ticks{window.start};
    for (const auto& [t, v] : ev.dispatches) {
      if (window.contains(t)) avail_ticks.insert(t);
    }
    for (Tick t : avail_ticks) {
      Constraint row;
      int dispatch_terms = 0;
      for (const auto& [dt, v] : ev.dispatches) {
        if (dt <= t) {
          row.container.sub(v);
          ++dispatch_terms;
        }
      }
      if (dispatch_terms <= base.initial_transporters) continue;  // cannot go negative
      for (const auto& [rt, v] : ev.ready) {
        if (rt <= t) row.container.add(v);
      }
      row.rel = Relation::Ge;
      row.bound = -static_cast<long long>(base.initial_transporters);
      row.tag = "avail " + base.id + " t" + std::to_string(t);
      p.constraints.push_back(std::move(row));
    }

    // Storage: initial stock plus arrivals minus dispatches never exceeds
    // capacity. The tally only rises at arrival ticks; arrivals after
    // window.end keep their rows so a late return cannot overflow unseen.
    std::set<Tick> store_ticks{window.start};
    for (const auto& [t, v] : ev.arrivals) {
      if (t >= window.start) store_ticks.insert(t);
    }
    const long long headroom = base.storage_capacity - base.initial_transporters;
    for (Tick t : store_ticks) {
      Constraint row;
      int arrival_terms = 0;
      for (const auto& [at_, v] : ev.arrivals) {
        if (at_ <= t) {
          row.container.add(v);
          ++arrival_terms;
        }
      }
      if (arrival_terms <= headroom) continue;  // cannot overflow
      for (const auto& [dt, v] : ev.dispatches) {
        if (dt <= t) row.container.sub(v);
      }
      row.rel = Relation::Le;
      row.bound = headroom;
      row.tag = "storage " + base.id + " t" + std::to_string(t);
      p.constraints.push_back(std::move(row));
    }
  }

  // TEMP dump hook
  if (const char* path = std::getenv("SSCHED_DUMP_PROG")) {
    nlohmann::json j;
    j["n_vars"] = p.n_vars;
    j["objective"] = p.objective;
    j["fixed"] = p.fixed;
    auto rows = nlohmann::json::array();
    for (const Constraint& c : p.constraints) {
      nlohmann::json r;
      r["rel"] = static_cast<int>(c.rel);
      r["bound"] = c.bound;
      r["terms"] = c.container.terms;
      rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    std::ofstream out(path, std::ios::app);
    out << j.dump() << "\n";
  }

  return p;
}

// ---------------------------------------------------------------------------
// Exact solver

namespace {

constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
constexpr double kPruneEps = 1e-9;

struct Row {
  long long lo = -kInf;
  long long hi = kInf;
  long long sum = 0;  // contribution of decided variables
  int pos_undecided = 0;
  int neg_undecided = 0;
  std::vector<std::pair<int, int>> terms;  // (var, +-1), one entry per var
};

struct Engine {
  int n = 0;
  const std::vector<double>* cost = nullptr;
  std::vector<Row> rows;
  std::vector<std::vector<std::pair<int, int>>> occ;  // var -> (row, coeff)
  std::vector<signed char> value;                     // -1 undecided
  std::vector<int> trail;
  int undecided = 0;
  double paid = 0.0;          // cost of decided-1 variables
  double neg_remaining = 0.0; // sum of negative costs over undecided non-group vars

  std::vector<std::vector<int>> groups;  // Eq-1 all-positive disjoint rows
  std::vector<int> group_of;             // var -> group index or -1
  std::vector<int> group_open_count;     // undecided members
  std::vector<int> group_ones;           // members decided 1

  bool assign(int var, int val) {
    std::vector<std::pair<int, int>> queue{{var, val}};
    while (!queue.empty()) {
      auto [u, uval] = queue.back();
      queue.pop_back();
      if (value[u] != -1) {
        if (value[u] != uval) return false;
        continue;
      }
      value[u] = static_cast<signed char>(uval);
      trail.push_back(u);
      --undecided;
      if (uval == 1) paid += (*cost)[u];
      const int g = group_of[u];
      if (g != -1) {
        --group_open_count[g];
        if (uval == 1) ++group_ones[g];
      } else if ((*cost)[u] < 0.0) {
        neg_remaining -= (*cost)[u];
      }
      // Apply every row update before reporting a contradiction; undo_to
      // reverses all of occ[u], so a partial application would corrupt sums.
      bool ok = true;
      for (const auto& [ri, coeff] : occ[u]) {
        Row& r = rows[ri];
        if (coeff > 0) {
          --r.pos_undecided;
          if (uval == 1) ++r.sum;
        } else {
          --r.neg_undecided;
          if (uval == 1) --r.sum;
        }
        if (!ok) continue;
        const long long smin = r.sum - r.neg_undecided;
        const long long smax = r.sum + r.pos_undecided;
        if (smin > r.hi || smax < r.lo) {
          ok = false;
          continue;
        }
        if (r.pos_undecided + r.neg_undecided > 0) {
          if (smin == r.hi) {  // everything must take its minimizing value
            for (const auto& [w, c2] : r.terms) {
              if (value[w] == -1) queue.push_back({w, c2 > 0 ? 0 : 1});
            }
          } else if (smax == r.lo) {  // everything must take its maximizing value
            for (const auto& [w, c2] : r.terms) {
              if (value[w] == -1) queue.push_back({w, c2 > 0 ? 1 : 0});
            }
          }
        }
      }
      if (!ok) return false;
    }
    return true;
  }

  void undo_to(std::size_t mark) {
    while (trail.size() > mark) {
      const int u = trail.back();
      trail.pop_back();
      const int uval = value[u];
      value[u] = -1;
      ++undecided;
      if (uval == 1) paid -= (*cost)[u];
      const int g = group_of[u];
      if (g != -1) {
        ++group_open_count[g];
        if (uval == 1) --group_ones[g];
      } else if ((*cost)[u] < 0.0) {
        neg_remaining += (*cost)[u];
      }
      for (const auto& [ri, coeff] : occ[u]) {
        Row& r = rows[ri];
        if (coeff > 0) {
          ++r.pos_undecided;
          if (uval == 1) --r.sum;
        } else {
          ++r.neg_undecided;
          if (uval == 1) ++r.sum;
        }
      }
    }
  }

  // Admissible bound. Base: cost already paid, plus each open group's
  // cheapest remaining member (exactly one must fire), plus undecided
  // negative costs outside groups. On top of that, price every row the
  // group-minimum completion would leave unsatisfied: covering its deficit
  // takes deviations (a group trades its minimum for a pricier member) or
  // flips of free variables (a relocation buys a credit), each with a
  // nonnegative margin over the base. A tiny cover DP picks the cheapest
  // mix per row; needs from several rows add up only when the rows share no
  // chargeable owner (a group deviates once, a variable flips once), which
  // holds naturally for rows guarding different bases or machines. A row
  // whose deficit exceeds every deviation on offer has no completion at
  // all, so the node prunes outright.
  double lower_bound() {
    double lb = paid + neg_remaining;
    ++lb_epoch;
    if (gsel.size() < groups.size()) {
      gsel.resize(groups.size());
      gsel_stamp.assign(groups.size(), 0);
      gb1.resize(groups.size());
      gb2.resize(groups.size());
      gb_stamp.assign(groups.size(), 0);
    }
    if (shat.size() < rows.size()) shat.assign(rows.size(), 0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (group_ones[g] > 0 || group_open_count[g] == 0) continue;
      for (int v : groups[g]) {
        if (value[v] == -1) {
          lb += (*cost)[v];
          gsel[g] = v;
          gsel_stamp[g] = lb_epoch;
          for (const auto& [ri, coeff] : occ[v]) {
            if (shat[ri] == 0) touched_rows.push_back(ri);
            shat[ri] += coeff;
          }
          break;
        }
      }
    }

    rneeds.clear();
    owners_flat.clear();
    bool dead = false;
    for (std::size_t ri = 0; ri < rows.size() && !dead; ++ri) {
      const Row& r = rows[ri];
      const long long s_hat = r.sum + shat[ri];
      long long k;
      bool raise;
      if (r.lo > -kInf && s_hat < r.lo) {
        k = r.lo - s_hat;
        raise = true;
      } else if (r.hi < kInf && s_hat > r.hi) {
        k = s_hat - r.hi;
        raise = false;
      } else {
        continue;
      }
      const std::size_t obegin = owners_flat.size();
      const double need = row_need(r, k, raise, &dead);
      if (need > 0.0) {
        rneeds.push_back({need, obegin, owners_flat.size()});
      } else {
        owners_flat.resize(obegin);
      }
    }
    for (int ri : touched_rows) shat[ri] = 0;
    touched_rows.clear();
    if (dead) return std::numeric_limits<double>::infinity();
    if (rneeds.empty()) return lb;
    if (rneeds.size() == 1) return lb + rneeds.front().need;

    std::sort(rneeds.begin(), rneeds.end(),
              [](const RowNeed& a, const RowNeed& b) { return a.need > b.need; });
    if (used.size() < static_cast<std::size_t>(n) + groups.size()) {
      used.assign(static_cast<std::size_t>(n) + groups.size(), 0);
    }
    for (const RowNeed& rn : rneeds) {
      bool clash = false;
      for (std::size_t i = rn.obegin; i < rn.oend; ++i) {
        if (used[owners_flat[i]]) {
          clash = true;
          break;
        }
      }
      if (clash) continue;
      for (std::size_t i = rn.obegin; i < rn.oend; ++i) {
        used[owners_flat[i]] = 1;
        touched.push_back(owners_flat[i]);
      }
      lb += rn.need;
    }
    for (int v : touched) used[v] = 0;
    touched.clear();
    return lb;
  }

  // Cheapest way to move row r by k units in the needed direction, relative
  // to the group-minimum baseline. Appends the owner id (var, or n + group)
  // of every deviation considered to owners_flat so the caller can keep
  // accepted rows disjoint. Sets *dead when not even flipping everything
  // covers k: then no completion satisfies the row.
  double row_need(const Row& r, long long k, bool raise, bool* dead) {
    // Net coefficient per variable of this row, O(1) after one stamp pass.
    ++row_epoch;
    if (vnet.size() < static_cast<std::size_t>(n)) {
      vnet.resize(n);
      vnet_stamp.assign(n, 0);
    }
    for (const auto& [v, coeff] : r.terms) {
      vnet[v] = coeff;
      vnet_stamp[v] = row_epoch;
    }
    const auto net_of = [&](int v) { return vnet_stamp[v] == row_epoch ? vnet[v] : 0; };

    // Deviation menu. A group owns up to two mutually exclusive options:
    // move one unit (swap its minimum for a member one step better in this
    // row, or walk to a member outside it) or two (a member on the opposite
    // side of the row from its minimum). A free variable owns a single
    // one-unit flip.
    opts.clear();
    long long total_units = 0;
    for (const auto& [v, coeff] : r.terms) {
      if (value[v] != -1) continue;
      const int g = group_of[v];
      if (g == -1) {
        if (raise ? coeff > 0 : coeff < 0) {
          const double c = (*cost)[v];
          opts.push_back({v, c < 0.0 ? 0.0 : c, kInfCost});
          total_units += 1;
        }
        continue;
      }
      if (gsel_stamp[g] != lb_epoch) continue;  // group closed this node
      const int vg = gsel[g];
      if (gb_stamp[g] != row_epoch) {
        gb_stamp[g] = row_epoch;
        gb1[g] = kInfCost;
        gb2[g] = kInfCost;
        gorder.push_back(g);
      }
      if (v == vg) continue;
      const int du = raise ? coeff - net_of(vg) : net_of(vg) - coeff;
      if (du <= 0) continue;
      const double margin = (*cost)[v] - (*cost)[vg];
      if (du == 1) {
        gb1[g] = std::min(gb1[g], margin);
      } else {
        gb2[g] = std::min(gb2[g], margin);
      }
    }
    // A group whose minimum sits on the wrong side of the row can also walk
    // away to a member outside the row entirely (net zero there): one unit,
    // at the cost gap to its cheapest such member.
    for (const int g : gorder) {
      const int vg = gsel[g];
      const int base_net = net_of(vg);
      if (raise ? base_net < 0 : base_net > 0) {
        for (int m : groups[g]) {
          if (value[m] != -1 || m == vg) continue;
          if (net_of(m) == 0) {
            gb1[g] = std::min(gb1[g], (*cost)[m] - (*cost)[vg]);
            break;  // members are cost-sorted
          }
        }
      }
      if (gb1[g] >= kInfCost && gb2[g] >= kInfCost) continue;
      opts.push_back({n + g, gb1[g], gb2[g]});
      total_units += gb2[g] < kInfCost ? 2 : 1;
    }
    gorder.clear();
    if (total_units < k) {
      if (std::getenv("SSCHED_SOLVE_DEBUG")) {  // TEMP
        std::fprintf(stderr, "[dead] lo=%lld hi=%lld sum=%lld k=%lld raise=%d units=%lld terms=%zu\n",
                     r.lo == -kInf ? -99 : r.lo, r.hi == kInf ? 99 : r.hi, r.sum, k, (int)raise,
                     total_units, r.terms.size());
        for (const auto& [v, coeff] : r.terms) {
          std::fprintf(stderr, "  v=%d coeff=%d val=%d g=%d gsel=%d\n", v, coeff, (int)value[v],
                       group_of[v], group_of[v] != -1 ? gsel[group_of[v]] : -1);
        }
      }
      *dead = true;
      return 0.0;
    }
    const long long kk = std::min<long long>(k, 8);
    dp.assign(static_cast<std::size_t>(kk) + 1, kInfCost);
    dp[0] = 0.0;
    for (const Opt& o : opts) {
      owners_flat.push_back(o.owner);
      for (long long j = kk - 1; j >= 0; --j) {
        if (dp[j] >= kInfCost) continue;
        if (o.pay1 < kInfCost) {
          const auto t = static_cast<std::size_t>(std::min(kk, j + 1));
          dp[t] = std::min(dp[t], dp[j] + o.pay1);
        }
        if (o.pay2 < kInfCost) {
          const auto t = static_cast<std::size_t>(std::min(kk, j + 2));
          dp[t] = std::min(dp[t], dp[j] + o.pay2);
        }
      }
    }
    return dp[static_cast<std::size_t>(kk)];
  }

  struct RowNeed {
    double need;
    std::size_t obegin, oend;  // owner span in owners_flat
  };
  struct Opt {
    int owner;          // var id, or n + group id
    double pay1, pay2;  // exclusive: one unit for pay1 or two for pay2
  };
  static constexpr double kInfCost = std::numeric_limits<double>::max() / 4;

  // lower_bound keeps these to avoid reallocating on every node.
  int lb_epoch = 0;
  int row_epoch = 0;
  std::vector<int> gsel, gsel_stamp, gb_stamp, gorder, touched_rows, touched;
  std::vector<int> vnet, vnet_stamp;
  std::vector<double> gb1, gb2, dp;
  std::vector<long long> shat;
  std::vector<RowNeed> rneeds;
  std::vector<int> owners_flat;
  std::vector<Opt> opts;
  std::vector<char> used;
};

}  // namespace

SolveResult solve(const BinaryProgram& program) {
  const int n = program.n_vars;
  Engine e;
  e.n = n;
  e.cost = &program.objective;
  if (static_cast<int>(program.objective.size()) != n) {
    throw InputError("solve: objective size must equal n_vars");
  }
  e.value.assign(n, -1);
  e.occ.assign(n, {});
  e.undecided = n;
  e.group_of.assign(n, -1);

  // Combine duplicate terms; a dispatch and return at the same base cancel.
  e.rows.reserve(program.constraints.size());
  for (const Constraint& c : program.constraints) {
    Row r;
    std::map<int, int> combined;
    for (const auto& [v, coeff] : c.container.terms) {
      if (v < 0 || v >= n) throw InputError("solve: constraint references unknown variable");
      combined[v] += coeff;
    }
    for (const auto& [v, coeff] : combined) {
      if (coeff == 0) continue;
      if (coeff != 1 && coeff != -1) {
        throw InputError("solve: combined coefficient outside +-1 in '" + c.tag + "'");
      }
      r.terms.emplace_back(v, coeff);
      if (coeff > 0) {
        ++r.pos_undecided;
      } else {
        ++r.neg_undecided;
      }
    }
    switch (c.rel) {
      case Relation::Eq: r.lo = r.hi = c.bound; break;
      case Relation::Le: r.hi = c.bound; break;
      case Relation::Ge: r.lo = c.bound; break;
    }
    // A row no 0-1 assignment can satisfy makes the program infeasible up
    // front; later interval checks assume every row starts reachable.
    if (-static_cast<long long>(r.neg_undecided) > r.hi ||
        static_cast<long long>(r.pos_undecided) < r.lo) {
      SolveResult res;
      res.status = SolveStatus::Infeasible;
      return res;
    }
    if (r.terms.empty()) continue;
    const int ri = static_cast<int>(e.rows.size());
    for (const auto& [v, coeff] : r.terms) e.occ[v].emplace_back(ri, coeff);
    e.rows.push_back(std::move(r));
  }

  // Selection groups: Eq-1 rows with only +1 terms, variable-disjoint.
  for (const Row& r : e.rows) {
    if (r.lo != 1 || r.hi != 1 || r.neg_undecided != 0) continue;
    bool free = true;
    for (const auto& [v, coeff] : r.terms) {
      if (e.group_of[v] != -1) {
        free = false;
        break;
      }
    }
    if (!free) continue;
    const int g = static_cast<int>(e.groups.size());
    std::vector<int> members;
    for (const auto& [v, coeff] : r.terms) {
      e.group_of[v] = g;
      members.push_back(v);
    }
    e.group_open_count.push_back(static_cast<int>(members.size()));
    e.group_ones.push_back(0);
    e.groups.push_back(std::move(members));
  }
  // Cheapest member first; ties keep variable order so branching still
  // prefers the earliest-generated candidate.
  for (auto& members : e.groups) {
    std::sort(members.begin(), members.end(), [&](int a, int b) {
      if (program.objective[a] != program.objective[b]) {
        return program.objective[a] < program.objective[b];
      }
      return a < b;
    });
  }
  for (int v = 0; v < n; ++v) {
    if (e.group_of[v] == -1 && program.objective[v] < 0.0) {
      e.neg_remaining += program.objective[v];
    }
  }

  SolveResult result;
  for (const auto& [v, val] : program.fixed) {
    if (v < 0 || v >= n || (val != 0 && val != 1)) throw InputError("solve: bad fixed assignment");
    if (!e.assign(v, val)) {
      result.status = SolveStatus::Infeasible;
      return result;
    }
  }

  // Pigeonhole presolve over capacity rows (every term the same sign). A
  // row limiting a set S to k picks fails when the groups that can only
  // place their mandatory pick inside S, plus picks already inside, exceed
  // k. The search alone reaches that verdict only after sweeping every
  // member combination, which is hopeless when S mixes hundreds of
  // near-equal candidates.
  {
    std::vector<char> in_s(n, 0);
    for (const Row& r : e.rows) {
      bool all_pos = true;
      bool all_neg = true;
      for (const auto& [v, coeff] : r.terms) {
        (coeff > 0 ? all_neg : all_pos) = false;
      }
      long long k;
      long long ones;
      if (all_pos && r.hi < kInf) {
        k = r.hi;
        ones = r.sum;
      } else if (all_neg && r.lo > -kInf) {
        k = -r.lo;
        ones = -r.sum;
      } else {
        continue;
      }
      for (const auto& [v, coeff] : r.terms) in_s[v] = 1;
      long long demand = 0;
      for (std::size_t g = 0; g < e.groups.size(); ++g) {
        if (e.group_ones[g] > 0 || e.group_open_count[g] == 0) continue;
        bool inside = true;
        for (int v : e.groups[g]) {
          if (e.value[v] == -1 && !in_s[v]) {
            inside = false;
            break;
          }
        }
        if (inside) ++demand;
      }
      for (const auto& [v, coeff] : r.terms) in_s[v] = 0;
      if (ones + demand > k) {
        result.status = SolveStatus::Infeasible;
        return result;
      }
    }
  }

  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<signed char> best_value;

  auto column_objective = [&]() {
    double obj = 0.0;
    for (int v = 0; v < n; ++v) {
      if (e.value[v] == 1) obj += program.objective[v];
    }
    return obj;
  };

  // Branch choice: cheapest member of the tightest open group (take it
  // first), else a variable that can repair a row the all-zeros completion
  // violates, else the lowest undecided negative-cost variable.
  auto pick_branch = [&](int& first_val) -> int {
    int g = -1;
    for (std::size_t i = 0; i < e.groups.size(); ++i) {
      if (e.group_ones[i] > 0 || e.group_open_count[i] == 0) continue;
      if (g == -1 || e.group_open_count[i] < e.group_open_count[g]) g = static_cast<int>(i);
    }
    if (g != -1) {
      for (int v : e.groups[g]) {
        if (e.value[v] == -1) {
          first_val = 1;
          return v;
        }
      }
    }
    for (const Row& r : e.rows) {
      if (r.sum >= r.lo && r.sum <= r.hi) continue;
      const bool need_raise = r.sum < r.lo;
      int pick = -1;
      for (const auto& [v, coeff] : r.terms) {
        if (e.value[v] != -1) continue;
        if ((coeff > 0) != need_raise) continue;  // setting v=1 moves sum the right way
        if (pick == -1 || (*e.cost)[v] < (*e.cost)[pick]) pick = v;
      }
      if (pick == -1) throw InputError("solve: violated row with no repair variable");
      first_val = 1;
      return pick;  // the interval check guarantees repair room exists
    }
    for (int v = 0; v < n; ++v) {
      if (e.value[v] == -1 && (*e.cost)[v] < 0.0) {
        first_val = 1;
        return v;
      }
    }
    return -1;  // all-zeros completion is feasible and optimal here
  };

  struct Node {
    int var;
    int first;
    int tried;
    std::size_t mark;
  };
  std::vector<Node> stack;
  bool descend = true;

  // TEMP instrumentation
  static const bool dbg = std::getenv("SSCHED_SOLVE_DEBUG") != nullptr;
  long long dbg_nodes = 0, dbg_first = -1;
  double dbg_first_obj = 0.0;
  const auto dbg_t0 = std::chrono::steady_clock::now();

  auto record_incumbent = [&]() {
    const double obj = column_objective();
    if (obj < best_obj) {
      if (dbg_first < 0) {
        dbg_first = dbg_nodes;
        dbg_first_obj = obj;
      }
      best_obj = obj;
      best_value = e.value;
      for (auto& v : best_value) {
        if (v == -1) v = 0;
      }
    }
  };

  while (true) {
    if (descend) {
      ++dbg_nodes;
      if (dbg && dbg_nodes % 100000 == 0) {
        std::fprintf(stderr, "[solve] nodes=%lldk depth=%zu best=%g undecided=%d elapsed=%.1fs\n",
                     dbg_nodes / 1000, stack.size(), best_obj, e.undecided,
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - dbg_t0).count());
      }
      if (e.lower_bound() >= best_obj + kPruneEps) {
        descend = false;
        continue;
      }
      // Propagation checks every row as its last member is decided, so a
      // fully decided state is feasible.
      if (e.undecided == 0) {
        record_incumbent();
        descend = false;
        continue;
      }
      int first_val = 0;
      const int v = pick_branch(first_val);
      if (v == -1) {
        // No open group, no violated row, no undecided negative cost: the
        // all-zeros completion is feasible and optimal for this subtree.
        record_incumbent();
        descend = false;
        continue;
      }
      stack.push_back({v, first_val, 0, e.trail.size()});
      descend = e.assign(v, first_val);
      continue;
    }
    if (stack.empty()) break;
    Node& nd = stack.back();
    e.undo_to(nd.mark);
    if (nd.tried == 0) {
      nd.tried = 1;
      descend = e.assign(nd.var, 1 - nd.first);
    } else {
      stack.pop_back();
    }
  }

  if (dbg) {
    std::fprintf(stderr,
                 "[solve] done nodes=%lld first_incumbent@%lld obj %g -> %g elapsed=%.2fs\n",
                 dbg_nodes, dbg_first, dbg_first_obj, best_obj,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - dbg_t0).count());
  }

  if (!std::isfinite(best_obj)) {
    result.status = SolveStatus::Infeasible;
    return result;
  }
  result.status = SolveStatus::Optimal;
  result.objective_value = best_obj;
  result.assignment.assign(n, 0);
  for (int v = 0; v < n; ++v) result.assignment[v] = best_value[v] == 1 ? 1 : 0;
  return result;
}

std::string dump_lp(const BinaryProgram& program) {
  auto sanitize = [](const std::string& s) {
    std::string out;
    for (char ch : s) out.push_back(std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_');
    return out;
  };
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };

  std::ostringstream os;
  os << "Minimize\n obj:";
  bool first = true;
  for (int v = 0; v < program.n_vars; ++v) {
    const double c = program.objective[v];
    if (c == 0.0) continue;
    if (first) {
      os << ' ' << num(c) << " c" << v;
      first = false;
    } else {
      os << (c < 0 ? " - " : " + ") << num(std::abs(c)) << " c" << v;
    }
  }
  if (first) os << " 0 c0";
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < program.constraints.size(); ++i) {
    const Constraint& c = program.constraints[i];
    os << ' ' << (c.tag.empty() ? "r" + std::to_string(i) : sanitize(c.tag)) << ':';
    for (const auto& [v, coeff] : c.container.terms) {
      os << (coeff < 0 ? " - " : " + ") << 'c' << v;
    }
    switch (c.rel) {
      case Relation::Eq: os << " = "; break;
      case Relation::Le: os << " <= "; break;
      case Relation::Ge: os << " >= "; break;
    }
    os << c.bound << '\n';
  }
  os << "Bounds\n";
  for (const auto& [v, val] : program.fixed) os << " c" << v << " = " << val << '\n';
  os << "Binaries\n";
  for (int v = 0; v < program.n_vars; ++v) os << " c" << v;
  os << "\nEnd\n";
  return os.str();
}

}  // namespace ssched
