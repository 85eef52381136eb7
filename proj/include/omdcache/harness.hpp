#pragma once

#include <algorithm>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "omdcache/baselines.hpp"
#include "omdcache/bounds.hpp"
#include "omdcache/core.hpp"
#include "omdcache/metrics.hpp"
#include "omdcache/policies.hpp"
#include "omdcache/rounding.hpp"
#include "omdcache/trace_io.hpp"

namespace omdcache {

// ---------------------------------------------------------------------------
// Experiment runner: one policy over one trace, recording per-slot service,
// update, and benchmark costs.  Every slot is served with the current state,
// then the policy updates; the update cost charged to slot s is the cost of
// the state change that follows it.
// ---------------------------------------------------------------------------

enum class RoundingScheme {
  None,         // play the fractional state directly
  Independent,  // fresh rounding threshold every slot
  Coupled,      // one rounding threshold for the whole run
  Optimal,      // sample transitions from the cheapest coupling of the
                // consecutive rounded-state distributions
};

enum class ComparatorMode {
  FullTrace,  // best static set in hindsight over the whole trace
  Prefix,     // best static set over the slots seen so far
};

struct PolicyConfig {
  // One of: ogd, omd-q, omd-ne, omd-ne-delta, ftl, ftpl, lru, lfu, wlfu,
  // best-static, best-dynamic, constant-uniform.
  std::string id = "ogd";
  int capacity = 1;
  LearningSchedule schedule = LearningSchedule::theory();
  double q = 1.5;                // omd-q
  double delta = 1e-4;           // omd-ne-delta
  double perturbation = 1.0;     // ftpl noise scale
  long long window = 0;          // wlfu; 0 means horizon * batch_size
  RoundingScheme rounding = RoundingScheme::None;
  ComparatorMode comparator = ComparatorMode::FullTrace;
  bool reset_on_change = false;  // re-pool mass over files whose popularity changed
  bool shuffle_requests = false; // randomize request order inside a slot (caches)
  std::uint64_t seed = 1;
};

inline bool is_gradient_policy(const std::string& id) {
  return id == "ogd" || id == "omd-q" || id == "omd-ne" || id == "omd-ne-delta";
}

inline bool is_known_policy(const std::string& id) {
  return is_gradient_policy(id) || id == "ftl" || id == "ftpl" || id == "lru" ||
         id == "lfu" || id == "wlfu" || id == "best-static" || id == "best-dynamic" ||
         id == "constant-uniform";
}

inline MirrorMap mirror_map_for(const PolicyConfig& cfg) {
  if (cfg.id == "ogd") return MirrorMap::euclidean();
  if (cfg.id == "omd-q") return MirrorMap::qnorm(cfg.q);
  if (cfg.id == "omd-ne") return MirrorMap::negentropy();
  if (cfg.id == "omd-ne-delta") return MirrorMap::negentropy_delta(cfg.delta);
  throw InvalidInput("mirror_map_for: not a gradient policy: " + cfg.id);
}

// Trace-derived quantities that parameterize learning rates and bounds.
// Not validated here: callers that only need fixed rates may hold
// degenerate values.
inline BoundInputs bound_inputs_for(const Trace& trace, const Catalog& cat, int k) {
  BoundInputs in;
  in.catalog_size = trace.catalog_size;
  in.capacity = k;
  in.batch_size = trace.batch_size;
  in.max_multiplicity = trace.max_multiplicity;
  in.horizon = trace.horizon;
  in.w_max = cat.max_service_cost();
  return in;
}

namespace detail {

inline std::vector<double> benchmark_costs(const Trace& trace, const Catalog& cat, int k,
                                           ComparatorMode mode) {
  const long long b = trace.num_slots();
  std::vector<double> out(static_cast<std::size_t>(b));
  if (mode == ComparatorMode::FullTrace) {
    const IntegralState best = best_static(trace, cat, k);
    for (long long s = 0; s < b; ++s) {
      out[static_cast<std::size_t>(s)] =
          service_cost(trace.batches[static_cast<std::size_t>(s)], best, cat);
    }
    return out;
  }
  std::vector<double> score(static_cast<std::size_t>(trace.catalog_size), 0.0);
  for (long long s = 0; s < b; ++s) {
    const RequestBatch& r = trace.batches[static_cast<std::size_t>(s)];
    for (const auto& [file, count] : r.counts) {
      score[static_cast<std::size_t>(file)] +=
          cat.service_cost_w[static_cast<std::size_t>(file)] * static_cast<double>(count);
    }
    out[static_cast<std::size_t>(s)] = service_cost(r, top_k_indices(score, k), cat);
  }
  return out;
}

inline std::string rounding_name(RoundingScheme s) {
  switch (s) {
    case RoundingScheme::None: return "none";
    case RoundingScheme::Independent: return "independent";
    case RoundingScheme::Coupled: return "coupled";
    case RoundingScheme::Optimal: return "optimal";
  }
  return "?";
}

inline std::string schedule_name(const LearningSchedule& s) {
  switch (s.kind) {
    case LearningSchedule::Kind::Fixed: return "fixed:" + format_double(s.value);
    case LearningSchedule::Kind::TheoryOptimal: return "theory";
    case LearningSchedule::Kind::Diminishing:
      return s.value > 0.0 ? "diminishing:" + format_double(s.value) : "diminishing";
  }
  return "?";
}

inline std::vector<std::pair<std::string, std::string>> config_snapshot(
    const Trace& trace, const PolicyConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> snap;
  snap.emplace_back("policy", cfg.id);
  snap.emplace_back("capacity", std::to_string(cfg.capacity));
  snap.emplace_back("seed", std::to_string(cfg.seed));
  snap.emplace_back("catalog_size", std::to_string(trace.catalog_size));
  snap.emplace_back("batch_size", std::to_string(trace.batch_size));
  snap.emplace_back("max_multiplicity", std::to_string(trace.max_multiplicity));
  snap.emplace_back("horizon", std::to_string(trace.horizon));
  snap.emplace_back("slots", std::to_string(trace.num_slots()));
  snap.emplace_back("rounding", rounding_name(cfg.rounding));
  snap.emplace_back("comparator",
                    cfg.comparator == ComparatorMode::FullTrace ? "full-trace" : "prefix");
  if (is_gradient_policy(cfg.id)) {
    snap.emplace_back("schedule", schedule_name(cfg.schedule));
    if (cfg.id == "omd-q") snap.emplace_back("q", format_double(cfg.q));
    if (cfg.id == "omd-ne-delta") snap.emplace_back("delta", format_double(cfg.delta));
    if (cfg.reset_on_change) snap.emplace_back("reset_on_change", "1");
  }
  if (cfg.id == "ftpl") snap.emplace_back("perturbation", format_double(cfg.perturbation));
  if (cfg.id == "wlfu") snap.emplace_back("window", std::to_string(cfg.window));
  if (cfg.shuffle_requests) snap.emplace_back("shuffle_requests", "1");
  std::sort(snap.begin(), snap.end());
  return snap;
}

// Pool the current mass over the files whose popularity just changed and
// spread it uniformly across them; the rest of the state is untouched.
inline FractionalState pooled_reset(const FractionalState& x, const std::vector<double>& oldp,
                                    const std::vector<double>& newp) {
  FractionalState next = x;
  std::vector<int> changed;
  KahanAccumulator pooled;
  for (std::size_t i = 0; i < newp.size(); ++i) {
    if (newp[i] != oldp[i]) {
      changed.push_back(static_cast<int>(i));
      pooled.add(x.x[i]);
    }
  }
  if (changed.empty()) return next;
  const double share = pooled.value() / static_cast<double>(changed.size());
  for (int i : changed) next.x[static_cast<std::size_t>(i)] = share;
  return next;
}

}  // namespace detail

inline RunRecord run_experiment(const Trace& trace, const Catalog& cat,
                                const PolicyConfig& cfg) {
  trace.validate();
  cat.validate();
  if (cat.n_files != trace.catalog_size) {
    throw InvalidInput("run_experiment: catalog does not match trace");
  }
  const int n = trace.catalog_size;
  const int k = cfg.capacity;
  if (k < 1 || k > n) throw InvalidInput("run_experiment: need 1 <= capacity <= catalog");
  if (!is_known_policy(cfg.id)) throw InvalidInput("run_experiment: unknown policy " + cfg.id);
  const bool fractional = is_gradient_policy(cfg.id) || cfg.id == "constant-uniform";
  if (cfg.rounding != RoundingScheme::None && !fractional) {
    throw InvalidInput("run_experiment: rounding applies to fractional policies only");
  }

  const long long b = trace.num_slots();
  RunRecord rec;
  rec.policy_id = cfg.id;
  rec.seed = cfg.seed;
  rec.batch_size = trace.batch_size;
  rec.config = detail::config_snapshot(trace, cfg);
  rec.service_costs.reserve(static_cast<std::size_t>(b));
  rec.update_costs.reserve(static_cast<std::size_t>(b));
  rec.comparator_costs = detail::benchmark_costs(trace, cat, k, cfg.comparator);

  RandomSource rng(cfg.seed);

  if (fractional) {
    const bool constant = cfg.id == "constant-uniform";
    const MirrorMap map = constant ? MirrorMap::euclidean() : mirror_map_for(cfg);
    const BoundInputs bin = bound_inputs_for(trace, cat, k);
    GradientPolicy pol(map, cat, k);
    pol.reset(initial_state(n, k));

    double coupled_xi = 0.0;
    if (cfg.rounding == RoundingScheme::Coupled) coupled_xi = rng.uniform();
    IntegralState z_cur;
    RoundedSupport sup_cur;
    int z_idx = -1;
    switch (cfg.rounding) {
      case RoundingScheme::None:
        break;
      case RoundingScheme::Independent:
        z_cur = online_round(pol.state(), rng.uniform());
        break;
      case RoundingScheme::Coupled:
        z_cur = online_round(pol.state(), coupled_xi);
        break;
      case RoundingScheme::Optimal:
        sup_cur = decompose(pol.state());
        z_idx = sample_support(sup_cur, rng);
        z_cur = sup_cur.states[static_cast<std::size_t>(z_idx)];
        break;
    }

    std::size_t next_change = 1;
    long long epoch_slot = 0;
    for (long long s = 0; s < b; ++s) {
      if (cfg.reset_on_change && next_change < trace.popularity.size() &&
          trace.popularity[next_change].first == s) {
        pol.reset(detail::pooled_reset(pol.state(), trace.popularity[next_change - 1].second,
                                       trace.popularity[next_change].second));
        ++next_change;
        epoch_slot = 0;
      }
      ++epoch_slot;
      const RequestBatch& r = trace.batches[static_cast<std::size_t>(s)];

      double service;
      if (cfg.rounding == RoundingScheme::None) {
        service = 0.0;
        for (const auto& [file, count] : r.counts) {
          service += cat.service_cost_w[static_cast<std::size_t>(file)] *
                     static_cast<double>(count) * (1.0 - pol.value(file));
        }
      } else {
        service = service_cost(r, z_cur, cat);
      }

      FractionalState x_prev;
      if (cfg.rounding == RoundingScheme::None) x_prev = pol.state();

      if (!constant) {
        pol.step(r, schedule_rate(cfg.schedule, map, bin, epoch_slot));
      }

      double update;
      switch (cfg.rounding) {
        case RoundingScheme::None:
          update = update_cost(r, x_prev, pol.state(), cat);
          break;
        case RoundingScheme::Independent: {
          IntegralState z_next = online_round(pol.state(), rng.uniform());
          update = update_cost(r, z_cur, z_next, cat);
          z_cur = std::move(z_next);
          break;
        }
        case RoundingScheme::Coupled: {
          IntegralState z_next = online_round(pol.state(), coupled_xi);
          update = update_cost(r, z_cur, z_next, cat);
          z_cur = std::move(z_next);
          break;
        }
        case RoundingScheme::Optimal: {
          RoundedSupport sup_next = decompose(pol.state());
          const TransportPlan plan = optimal_coupling(sup_cur, sup_next, r, cat, n);
          const int next_idx = sample_transition(plan, z_idx, rng);
          IntegralState z_next = sup_next.states[static_cast<std::size_t>(next_idx)];
          update = update_cost(r, z_cur, z_next, cat);
          z_cur = std::move(z_next);
          sup_cur = std::move(sup_next);
          z_idx = next_idx;
          break;
        }
        default:
          throw InvalidInput("run_experiment: unknown rounding scheme");
      }

      rec.service_costs.push_back(service);
      rec.update_costs.push_back(update);
    }
  } else if (cfg.id == "ftl" || cfg.id == "ftpl") {
    FollowTheLeader ftl(cat, k);
    PerturbedLeader* ftpl = nullptr;
    PerturbedLeader ftpl_store =
        cfg.id == "ftpl" ? PerturbedLeader(n, k, cfg.perturbation, rng)
                         : PerturbedLeader(1, 1, 0.0, rng);
    if (cfg.id == "ftpl") ftpl = &ftpl_store;

    IntegralState z_cur = ftpl != nullptr ? ftpl->state(1) : ftl.state();
    for (long long s = 0; s < b; ++s) {
      const RequestBatch& r = trace.batches[static_cast<std::size_t>(s)];
      rec.service_costs.push_back(service_cost(r, z_cur, cat));
      if (ftpl != nullptr) {
        ftpl->observe(r);
      } else {
        ftl.observe(r);
      }
      IntegralState z_next = ftpl != nullptr ? ftpl->state(s + 2) : ftl.state();
      rec.update_costs.push_back(update_cost(r, z_cur, z_next, cat));
      z_cur = std::move(z_next);
    }
  } else if (cfg.id == "lru" || cfg.id == "lfu" || cfg.id == "wlfu") {
    EvictionCache::Variant variant = EvictionCache::Variant::LRU;
    long long window = 0;
    if (cfg.id == "lfu") variant = EvictionCache::Variant::LFU;
    if (cfg.id == "wlfu") {
      variant = EvictionCache::Variant::WindowLFU;
      window = cfg.window > 0
                   ? cfg.window
                   : trace.horizon * static_cast<long long>(trace.batch_size);
    }
    EvictionCache cache(variant, n, k, window);
    RandomSource* shuffle = cfg.shuffle_requests ? &rng : nullptr;
    for (long long s = 0; s < b; ++s) {
      rec.service_costs.push_back(
          serve_batch(cache, trace.batches[static_cast<std::size_t>(s)], cat, shuffle));
      rec.update_costs.push_back(0.0);
    }
  } else if (cfg.id == "best-static") {
    const IntegralState best = best_static(trace, cat, k);
    for (long long s = 0; s < b; ++s) {
      rec.service_costs.push_back(
          service_cost(trace.batches[static_cast<std::size_t>(s)], best, cat));
      rec.update_costs.push_back(0.0);
    }
  } else {  // best-dynamic
    IntegralState z_cur = best_dynamic_state(trace, cat, k, 0);
    for (long long s = 0; s < b; ++s) {
      const RequestBatch& r = trace.batches[static_cast<std::size_t>(s)];
      rec.service_costs.push_back(service_cost(r, z_cur, cat));
      if (s + 1 < b) {
        IntegralState z_next = best_dynamic_state(trace, cat, k, s + 1);
        rec.update_costs.push_back(update_cost(r, z_cur, z_next, cat));
        z_cur = std::move(z_next);
      } else {
        rec.update_costs.push_back(0.0);
      }
    }
  }

  rec.validate();
  return rec;
}

// ---------------------------------------------------------------------------
// CSV emission: long format `slot,policy,metric,value`, one row per metric
// per emitted slot.  Prefix metrics are accumulated incrementally in the
// same order as the point functions in metrics.hpp, so emitted values match
// them bit for bit.
// ---------------------------------------------------------------------------

inline void write_run_csv(const std::vector<RunRecord>& runs, long long tau, std::ostream& os,
                          long long stride = 1) {
  if (tau < 1) throw InvalidInput("write_run_csv: tau must be >= 1");
  if (stride < 1) throw InvalidInput("write_run_csv: stride must be >= 1");
  os << "slot,policy,metric,value\n";
  for (const RunRecord& rec : runs) {
    rec.validate();
    const long long b = rec.num_slots();
    const double requests = static_cast<double>(rec.batch_size);
    KahanAccumulator service_sum, regret_sum, update_sum;
    for (long long t = 1; t <= b; ++t) {
      const std::size_t s = static_cast<std::size_t>(t - 1);
      service_sum.add(rec.service_costs[s]);
      regret_sum.add(rec.service_costs[s] - rec.comparator_costs[s]);
      update_sum.add(rec.update_costs[s]);
      if (t % stride != 0 && t != b) continue;
      const long long window = std::min(tau, t);
      KahanAccumulator recent;
      for (long long u = t - window; u < t; ++u) {
        recent.add(rec.service_costs[static_cast<std::size_t>(u)]);
      }
      const double tt = static_cast<double>(t);
      os << t << ',' << rec.policy_id << ",nac,"
         << detail::format_double(service_sum.value() / (requests * tt)) << '\n';
      os << t << ',' << rec.policy_id << ",nmac,"
         << detail::format_double(recent.value() / (requests * static_cast<double>(window)))
         << '\n';
      os << t << ',' << rec.policy_id << ",tar," << detail::format_double(regret_sum.value() / tt)
         << '\n';
      os << t << ',' << rec.policy_id << ",cuc," << detail::format_double(update_sum.value())
         << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Closed-loop stress tests.  Each returns the realized cost of the policy,
// the hindsight-best static cost on the same request sequence, and their
// difference.
// ---------------------------------------------------------------------------

struct AdversaryReport {
  long long slots = 0;
  double policy_cost = 0.0;
  double benchmark_cost = 0.0;
  double regret = 0.0;
};

// Two files, capacity one: after an opening single request, every slot
// carries two copies of whichever file the leader currently dropped.  A
// policy that regrips the leader each slot pays for every batch.
inline AdversaryReport run_alternating_pair_adversary(long long t_slots) {
  if (t_slots < 2) throw InvalidInput("run_alternating_pair_adversary: need >= 2 slots");
  const Catalog cat = Catalog::uniform(2);
  FollowTheLeader pol(cat, 1);
  double totals[2] = {0.0, 0.0};
  KahanAccumulator cost;
  for (long long s = 0; s < t_slots; ++s) {
    RequestBatch r;
    if (s == 0) {
      r = RequestBatch::single(0);
    } else {
      const int file = s % 2 == 1 ? 1 : 0;
      r.counts = {{file, 2}};
      r.batch_size = 2;
      r.max_multiplicity = 2;
    }
    cost.add(service_cost(r, pol.state(), cat));
    for (const auto& [file, count] : r.counts) {
      totals[file] += static_cast<double>(count);
    }
    pol.observe(r);
  }
  AdversaryReport rep;
  rep.slots = t_slots;
  rep.policy_cost = cost.value();
  rep.benchmark_cost = totals[0] + totals[1] - std::max(totals[0], totals[1]);
  rep.regret = rep.policy_cost - rep.benchmark_cost;
  return rep;
}

// Every slot requests exactly the files the policy does not currently hold
// (one copy each), so the policy misses everything, forever.  Supported
// policies: ftl, ftpl, lru, lfu, wlfu.
inline AdversaryReport run_uncached_sweep_adversary(const std::string& policy_id, int n, int k,
                                                    long long t_slots, std::uint64_t seed = 1,
                                                    double perturbation = 1.0) {
  if (n < 2 || k < 1 || k >= n) {
    throw InvalidInput("run_uncached_sweep_adversary: need 1 <= k < n");
  }
  if (t_slots < 1) throw InvalidInput("run_uncached_sweep_adversary: need >= 1 slot");
  const Catalog cat = Catalog::uniform(n);
  RandomSource rng(seed);

  const bool set_based = policy_id == "ftl" || policy_id == "ftpl";
  FollowTheLeader ftl(cat, k);
  PerturbedLeader ftpl_store = policy_id == "ftpl" ? PerturbedLeader(n, k, perturbation, rng)
                                                   : PerturbedLeader(1, 1, 0.0, rng);
  EvictionCache::Variant variant = EvictionCache::Variant::LRU;
  if (policy_id == "lfu") variant = EvictionCache::Variant::LFU;
  if (policy_id == "wlfu") variant = EvictionCache::Variant::WindowLFU;
  if (!set_based && policy_id != "lru" && policy_id != "lfu" && policy_id != "wlfu") {
    throw InvalidInput("run_uncached_sweep_adversary: unsupported policy " + policy_id);
  }
  EvictionCache cache(variant, n, k);

  std::vector<double> totals(static_cast<std::size_t>(n), 0.0);
  KahanAccumulator cost;
  std::vector<char> held(static_cast<std::size_t>(n));
  for (long long s = 0; s < t_slots; ++s) {
    std::fill(held.begin(), held.end(), 0);
    if (set_based) {
      const IntegralState z =
          policy_id == "ftpl" ? ftpl_store.state(s + 1) : ftl.state();
      for (int f : z.cached) held[static_cast<std::size_t>(f)] = 1;
    } else {
      for (int f : cache.resident_set()) held[static_cast<std::size_t>(f)] = 1;
    }

    RequestBatch r;
    for (int f = 0; f < n; ++f) {
      if (!held[static_cast<std::size_t>(f)]) r.counts.emplace_back(f, 1);
    }
    r.batch_size = static_cast<int>(r.counts.size());
    r.max_multiplicity = 1;
    for (const auto& [file, count] : r.counts) {
      totals[static_cast<std::size_t>(file)] += static_cast<double>(count);
    }

    if (set_based) {
      cost.add(static_cast<double>(r.counts.size()));  // every requested file is absent
      if (policy_id == "ftpl") {
        ftpl_store.observe(r);
      } else {
        ftl.observe(r);
      }
    } else {
      cost.add(serve_batch(cache, r, cat));
    }
  }

  const double grand = kahan_sum(totals);
  const IntegralState best = top_k_indices(totals, k);
  double kept = 0.0;
  for (int f : best.cached) kept += totals[static_cast<std::size_t>(f)];

  AdversaryReport rep;
  rep.slots = t_slots;
  rep.policy_cost = cost.value();
  rep.benchmark_cost = grand - kept;
  rep.regret = rep.policy_cost - rep.benchmark_cost;
  return rep;
}

// Rounding stress test: the fractional state stays uniform (k/n each), and
// every slot requests the lowest-index file.  Against a fresh rounding
// threshold per slot the realized cache keeps missing that file and keeps
// paying to re-fetch it, while a single shared threshold never changes the
// rounded state at all.
struct RoundingAdversaryReport {
  long long slots = 0;
  int seeds = 0;
  double mean_regret = 0.0;                  // service + update cost (best static pays 0)
  double mean_independent_update_cost = 0.0; // fresh threshold per slot
  double mean_coupled_update_cost = 0.0;     // one threshold per run
};

inline RoundingAdversaryReport run_fractional_rounding_adversary(int n, int k, long long t_slots,
                                                                 int n_seeds,
                                                                 std::uint64_t seed0 = 1) {
  if (n < 2 || k < 1 || k >= n) {
    throw InvalidInput("run_fractional_rounding_adversary: need 1 <= k < n");
  }
  if (t_slots < 1 || n_seeds < 1) {
    throw InvalidInput("run_fractional_rounding_adversary: need slots >= 1 and seeds >= 1");
  }
  const Catalog cat = Catalog::uniform(n);
  const FractionalState x = FractionalState::uniform(n, k);
  const RequestBatch r = RequestBatch::single(0);  // argmin of the uniform state

  KahanAccumulator regret_sum, indep_update_sum, coupled_update_sum;
  for (int i = 0; i < n_seeds; ++i) {
    RandomSource rng(seed0 + static_cast<std::uint64_t>(i));
    KahanAccumulator run_cost, run_update;
    IntegralState z = online_round(x, rng.uniform());
    for (long long s = 0; s < t_slots; ++s) {
      run_cost.add(service_cost(r, z, cat));
      IntegralState z_next = online_round(x, rng.uniform());
      run_update.add(update_cost(r, z, z_next, cat));
      z = std::move(z_next);
    }
    regret_sum.add(run_cost.value() + run_update.value());
    indep_update_sum.add(run_update.value());

    const double xi = rng.uniform();
    IntegralState zc = online_round(x, xi);
    KahanAccumulator coupled_update;
    for (long long s = 0; s < t_slots; ++s) {
      IntegralState z_next = online_round(x, xi);
      coupled_update.add(update_cost(r, zc, z_next, cat));
      zc = std::move(z_next);
    }
    coupled_update_sum.add(coupled_update.value());
  }

  RoundingAdversaryReport rep;
  rep.slots = t_slots;
  rep.seeds = n_seeds;
  rep.mean_regret = regret_sum.value() / n_seeds;
  rep.mean_independent_update_cost = indep_update_sum.value() / n_seeds;
  rep.mean_coupled_update_cost = coupled_update_sum.value() / n_seeds;
  return rep;
}

}  // namespace omdcache
