#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "omdcache/common.hpp"
#include "omdcache/core.hpp"

namespace omdcache {

// ---------------------------------------------------------------------------
// Threshold rounding of fractional allocations.
//
// For a threshold xi in (0, 1), file i is cached iff the running prefix mass
// reaches xi plus the number of files already picked:
//   sum_{j <= i} x_j >= xi + |picked so far|.
// This yields exactly k files for every xi and, with xi uniform, marginals
// P(i cached) = x_i.
// ---------------------------------------------------------------------------

inline IntegralState online_round(const FractionalState& x, double xi) {
  if (!(xi >= 0.0) || !(xi < 1.0)) {
    throw InvalidInput("online_round: threshold must lie in [0, 1)");
  }
  const int n = x.dim();
  const auto sweep = [&x, n](double threshold) {
    IntegralState z;
    z.capacity = x.capacity;
    KahanAccumulator prefix;
    for (int i = 0; i < n; ++i) {
      prefix.add(x.x[static_cast<std::size_t>(i)]);
      // The total mass is k by feasibility.  Clamping the running prefix at k
      // and pinning the final one there caps the pick count at k even when
      // summation drift overshoots.
      const double mass = (i == n - 1) ? static_cast<double>(x.capacity)
                                       : std::min(prefix.value(), static_cast<double>(x.capacity));
      // Compare the integer-free residue against the threshold; adding the
      // threshold to the picked count instead would round a sub-ulp nudge away
      // and over-pick on exactly-integral prefixes.
      if (mass - static_cast<double>(z.cached.size()) >= threshold) {
        z.cached.push_back(i);
      }
    }
    return z;
  };

  // xi == 0 would degenerately over-pick on exactly-integral prefixes; the
  // event has probability 2^-53 under a uniform draw and is nudged inside.
  double threshold = std::max(xi, 0x1.0p-53);
  for (int attempt = 0; attempt < 64; ++attempt) {
    IntegralState z = sweep(threshold);
    if (static_cast<int>(z.cached.size()) == x.capacity) return z;
    if (static_cast<int>(z.cached.size()) > x.capacity) break;  // clamp precludes this
    // The mass actually present can fall an ulp short of a crossing at k-1+t;
    // halving the threshold re-rounds as for a marginally smaller draw, the
    // mirror image of the clamp above.
    threshold *= 0.5;
  }
  throw NumericFailure("online_round: picked " +
                       std::to_string(sweep(threshold).cached.size()) + " files instead of " +
                       std::to_string(x.capacity));
}

// Distribution over integral states induced by a uniform threshold.  The
// rounded set is constant between consecutive fractional parts of the prefix
// sums, so the support has at most n distinct states, each weighted by its
// interval length.  States are emitted in lexicographic order of contents.
struct RoundedSupport {
  std::vector<IntegralState> states;
  std::vector<double> probs;

  int find(const IntegralState& z) const {
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (states[i].cached == z.cached) return static_cast<int>(i);
    }
    return -1;
  }
};

namespace detail {

// Ascending, de-duplicated interval boundaries of the rounding map: 0, 1 and
// the fractional parts of all prefix sums.
inline std::vector<double> rounding_breakpoints(const FractionalState& x) {
  std::vector<double> cuts;
  cuts.reserve(x.x.size() + 2);
  cuts.push_back(0.0);
  cuts.push_back(1.0);
  KahanAccumulator prefix;
  for (double v : x.x) {
    prefix.add(v);
    // Same clamp as the rounding loop, so the cuts match its decision points.
    const double mass = std::min(prefix.value(), static_cast<double>(x.capacity));
    const double frac = mass - std::floor(mass);
    if (frac > 0.0 && frac < 1.0) cuts.push_back(frac);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

}  // namespace detail

inline RoundedSupport decompose(const FractionalState& x) {
  const std::vector<double> cuts = detail::rounding_breakpoints(x);
  std::map<std::vector<int>, double> mass;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double width = cuts[j + 1] - cuts[j];
    const double mid = cuts[j] + 0.5 * width;
    if (!(mid > cuts[j] && mid < cuts[j + 1])) continue;  // sub-ulp interval
    mass[online_round(x, mid).cached] += width;
  }
  RoundedSupport support;
  for (auto& [cached, prob] : mass) {
    IntegralState z;
    z.capacity = x.capacity;
    z.cached = cached;
    support.states.push_back(std::move(z));
    support.probs.push_back(prob);
  }
  return support;
}

// Exact expectation over a shared threshold of the update cost between the
// roundings of two consecutive states: both rounding maps are constant
// between the merged breakpoints, so integrate interval by interval.
inline double expected_coupled_cost(const FractionalState& from, const FractionalState& to,
                                    const RequestBatch& served, const Catalog& cat) {
  if (from.dim() != to.dim()) throw InvalidInput("expected_coupled_cost: dimension mismatch");
  std::vector<double> cuts = detail::rounding_breakpoints(from);
  {
    const std::vector<double> more = detail::rounding_breakpoints(to);
    cuts.insert(cuts.end(), more.begin(), more.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  }
  double cost = 0.0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double width = cuts[j + 1] - cuts[j];
    const double mid = cuts[j] + 0.5 * width;
    if (!(mid > cuts[j] && mid < cuts[j + 1])) continue;
    const IntegralState a = online_round(from, mid);
    const IntegralState b = online_round(to, mid);
    cost += width * update_cost(served, lift(a, from.dim()), lift(b, to.dim()), cat);
  }
  return cost;
}

// Joint law of (round(from, xi), round(to, xi)) under one shared threshold,
// as a coupling between the two decompositions.  Used as the feasible
// benchmark the optimal transport plan must not exceed.
struct JointLaw {
  RoundedSupport from;
  RoundedSupport to;
  std::vector<std::vector<double>> prob;  // indexed [from][to]
};

inline JointLaw coupled_joint_law(const FractionalState& from, const FractionalState& to) {
  JointLaw law;
  law.from = decompose(from);
  law.to = decompose(to);
  law.prob.assign(law.from.states.size(),
                  std::vector<double>(law.to.states.size(), 0.0));
  std::vector<double> cuts = detail::rounding_breakpoints(from);
  {
    const std::vector<double> more = detail::rounding_breakpoints(to);
    cuts.insert(cuts.end(), more.begin(), more.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  }
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double width = cuts[j + 1] - cuts[j];
    const double mid = cuts[j] + 0.5 * width;
    if (!(mid > cuts[j] && mid < cuts[j + 1])) continue;
    const int a = law.from.find(online_round(from, mid));
    const int b = law.to.find(online_round(to, mid));
    if (a < 0 || b < 0) throw NumericFailure("coupled_joint_law: interval state not in support");
    law.prob[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] += width;
  }
  return law;
}

// ---------------------------------------------------------------------------
// Optimal transport between consecutive rounding distributions.
//
// Minimizes the expected update cost over all couplings of the two supports.
// Solved exactly by successive shortest augmenting paths on the bipartite
// transportation graph (Bellman-Ford handles the negative residual arcs);
// each augmentation exhausts a supply or a demand, so the loop is finite.
// ---------------------------------------------------------------------------

struct TransportPlan {
  std::vector<std::vector<double>> flow;  // indexed [from][to]
  double expected_cost = 0.0;
};

inline TransportPlan optimal_coupling(const RoundedSupport& from, const RoundedSupport& to,
                                      const RequestBatch& served, const Catalog& cat,
                                      int n_files) {
  const std::size_t m = from.states.size();
  const std::size_t l = to.states.size();
  if (m == 0 || l == 0) throw InvalidInput("optimal_coupling: empty support");

  std::vector<std::vector<double>> cost(m, std::vector<double>(l, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const FractionalState a = lift(from.states[i], n_files);
    for (std::size_t j = 0; j < l; ++j) {
      cost[i][j] = update_cost(served, a, lift(to.states[j], n_files), cat);
    }
  }

  TransportPlan plan;
  plan.flow.assign(m, std::vector<double>(l, 0.0));
  std::vector<double> supply = from.probs;
  std::vector<double> demand = to.probs;

  const double kDust = 1e-15;
  const std::size_t max_augmentations = 4 * (m + 1) * (l + 1) + 64;
  for (std::size_t step = 0; step <= max_augmentations; ++step) {
    bool any_supply = false;
    for (std::size_t i = 0; i < m; ++i) any_supply = any_supply || supply[i] > kDust;
    if (!any_supply) break;
    if (step == max_augmentations) {
      throw NumericFailure("optimal_coupling: augmentation limit exceeded");
    }

    // Shortest augmenting path from the set of remaining supplies over
    // forward arcs (cost c_ij) and residual backward arcs (cost -c_ij where
    // flow remains); Bellman-Ford since residual costs go negative.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist_d(l, inf), dist_s(m, inf);
    std::vector<int> par_d(l, -1), par_s(m, -1);
    for (std::size_t i = 0; i < m; ++i) {
      if (supply[i] > kDust) dist_s[i] = 0.0;
    }
    for (std::size_t round = 0; round < m + l + 1; ++round) {
      bool relaxed = false;
      for (std::size_t i = 0; i < m; ++i) {
        if (dist_s[i] == inf) continue;
        for (std::size_t j = 0; j < l; ++j) {
          if (dist_s[i] + cost[i][j] < dist_d[j]) {
            dist_d[j] = dist_s[i] + cost[i][j];
            par_d[j] = static_cast<int>(i);
            relaxed = true;
          }
        }
      }
      for (std::size_t j = 0; j < l; ++j) {
        if (dist_d[j] == inf) continue;
        for (std::size_t i = 0; i < m; ++i) {
          if (plan.flow[i][j] > kDust && dist_d[j] - cost[i][j] < dist_s[i]) {
            dist_s[i] = dist_d[j] - cost[i][j];
            par_s[i] = static_cast<int>(j);
            relaxed = true;
          }
        }
      }
      if (!relaxed) break;
    }

    std::size_t sink = l;
    for (std::size_t j = 0; j < l; ++j) {
      if (demand[j] > kDust && dist_d[j] < inf && (sink == l || dist_d[j] < dist_d[sink])) {
        sink = j;
      }
    }
    if (sink == l) break;  // residual dust only

    // Walk back to the originating supply to find the bottleneck, then push.
    double bottleneck = demand[sink];
    std::size_t origin = m;
    {
      std::size_t j = sink;
      while (true) {
        const std::size_t i = static_cast<std::size_t>(par_d[j]);
        if (par_s[i] < 0) {
          origin = i;
          break;
        }
        const std::size_t back = static_cast<std::size_t>(par_s[i]);
        bottleneck = std::min(bottleneck, plan.flow[i][back]);
        j = back;
      }
    }
    bottleneck = std::min(bottleneck, supply[origin]);
    {
      std::size_t j = sink;
      while (true) {
        const std::size_t i = static_cast<std::size_t>(par_d[j]);
        plan.flow[i][j] += bottleneck;
        if (par_s[i] < 0) break;
        const std::size_t back = static_cast<std::size_t>(par_s[i]);
        plan.flow[i][back] -= bottleneck;
        j = back;
      }
    }
    supply[origin] -= bottleneck;
    demand[sink] -= bottleneck;
  }

  plan.expected_cost = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < l; ++j) plan.expected_cost += plan.flow[i][j] * cost[i][j];
  }
  return plan;
}

// Conditional sampling from a transport plan: the next integral state given
// that the current one is from-state `row`.
inline int sample_transition(const TransportPlan& plan, int row, RandomSource& rng) {
  const std::vector<double>& flows = plan.flow[static_cast<std::size_t>(row)];
  double total = 0.0;
  for (double f : flows) total += f;
  if (!(total > 0.0)) throw NumericFailure("sample_transition: empty row in plan");
  double u = rng.uniform() * total;
  for (std::size_t j = 0; j < flows.size(); ++j) {
    u -= flows[j];
    if (u <= 0.0) return static_cast<int>(j);
  }
  return static_cast<int>(flows.size()) - 1;
}

// Draw an index from a support's probability vector.
inline int sample_support(const RoundedSupport& support, RandomSource& rng) {
  double total = 0.0;
  for (double p : support.probs) total += p;
  double u = rng.uniform() * total;
  for (std::size_t j = 0; j < support.probs.size(); ++j) {
    u -= support.probs[j];
    if (u <= 0.0) return static_cast<int>(j);
  }
  return static_cast<int>(support.probs.size()) - 1;
}

}  // namespace omdcache
