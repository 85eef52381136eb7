#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "omdcache/common.hpp"

namespace omdcache {

// Per-slot cost traces produced by one experiment run.  Slot indices are
// 0-based internally; metric prefixes are taken over 1-based lengths t.
struct RunRecord {
  std::string policy_id;
  std::uint64_t seed = 0;
  long long batch_size = 1;
  std::vector<double> service_costs;     // cost of serving slot s
  std::vector<double> update_costs;      // cost of the state change after slot s
  std::vector<double> comparator_costs;  // benchmark's service cost at slot s
  // Reproducibility snapshot: sorted key/value pairs describing the run.
  std::vector<std::pair<std::string, std::string>> config;

  long long num_slots() const { return static_cast<long long>(service_costs.size()); }

  void validate() const {
    if (service_costs.size() != update_costs.size() ||
        service_costs.size() != comparator_costs.size()) {
      throw InvalidInput("RunRecord: cost vectors must have equal length");
    }
    if (batch_size < 1) throw InvalidInput("RunRecord: batch_size must be >= 1");
  }
};

namespace detail {

inline void check_prefix(const RunRecord& rec, long long t) {
  rec.validate();
  if (t < 1 || t > rec.num_slots()) {
    throw InvalidInput("metric prefix length out of range");
  }
}

}  // namespace detail

// Average service cost per request over the first t slots.
inline double average_cost(const RunRecord& rec, long long t) {
  detail::check_prefix(rec, t);
  KahanAccumulator acc;
  for (long long s = 0; s < t; ++s) acc.add(rec.service_costs[static_cast<std::size_t>(s)]);
  return acc.value() / (static_cast<double>(rec.batch_size) * static_cast<double>(t));
}

// Average service cost per request over the most recent min(tau, t) slots.
inline double moving_average_cost(const RunRecord& rec, long long t, long long tau) {
  detail::check_prefix(rec, t);
  if (tau < 1) throw InvalidInput("moving_average_cost: tau must be >= 1");
  const long long window = std::min(tau, t);
  KahanAccumulator acc;
  for (long long s = t - window; s < t; ++s) {
    acc.add(rec.service_costs[static_cast<std::size_t>(s)]);
  }
  return acc.value() / (static_cast<double>(rec.batch_size) * static_cast<double>(window));
}

// Time-averaged regret: (policy service cost - comparator service cost)
// summed over the first t slots, divided by t.
inline double time_averaged_regret(const RunRecord& rec, long long t) {
  detail::check_prefix(rec, t);
  KahanAccumulator acc;
  for (long long s = 0; s < t; ++s) {
    acc.add(rec.service_costs[static_cast<std::size_t>(s)] -
            rec.comparator_costs[static_cast<std::size_t>(s)]);
  }
  return acc.value() / static_cast<double>(t);
}

// Cumulative update cost over the first t slots.
inline double cumulative_update_cost(const RunRecord& rec, long long t) {
  detail::check_prefix(rec, t);
  KahanAccumulator acc;
  for (long long s = 0; s < t; ++s) acc.add(rec.update_costs[static_cast<std::size_t>(s)]);
  return acc.value();
}

}  // namespace omdcache
