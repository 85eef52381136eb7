#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "omdcache/common.hpp"

namespace omdcache {

// Per-file cost weights.  service_cost_w (w) is charged per missed request,
// update_cost_w (w') per unit of cache space written.
struct Catalog {
  int n_files = 0;
  std::vector<double> service_cost_w;
  std::vector<double> update_cost_w;

  static Catalog uniform(int n) {
    if (n <= 0) throw InvalidInput("Catalog: n_files must be positive");
    Catalog c;
    c.n_files = n;
    c.service_cost_w.assign(static_cast<std::size_t>(n), 1.0);
    c.update_cost_w.assign(static_cast<std::size_t>(n), 1.0);
    return c;
  }

  void validate() const {
    if (n_files <= 0) throw InvalidInput("Catalog: n_files must be positive");
    if (static_cast<int>(service_cost_w.size()) != n_files ||
        static_cast<int>(update_cost_w.size()) != n_files) {
      throw InvalidInput("Catalog: weight vector sizes must match n_files");
    }
    for (double w : service_cost_w) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw InvalidInput("Catalog: service costs must be positive and finite");
      }
    }
    for (double w : update_cost_w) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw InvalidInput("Catalog: update costs must be non-negative and finite");
      }
    }
  }

  double max_service_cost() const {
    double m = 0.0;
    for (double w : service_cost_w) m = std::max(m, w);
    return m;
  }
};

// Fractional cache allocation on the capped simplex:
//   0 <= x_i <= 1,  sum_i x_i == capacity (within kFeasibilitySlack * k).
struct FractionalState {
  std::vector<double> x;
  int capacity = 0;

  static FractionalState uniform(int n, int k) {
    if (n <= 0 || k < 1 || k > n) {
      throw InvalidInput("FractionalState::uniform: need 1 <= k <= n");
    }
    FractionalState s;
    s.capacity = k;
    s.x.assign(static_cast<std::size_t>(n),
               static_cast<double>(k) / static_cast<double>(n));
    return s;
  }

  int dim() const { return static_cast<int>(x.size()); }

  void validate() const {
    if (capacity < 1 || capacity > dim()) {
      throw InvalidInput("FractionalState: need 1 <= capacity <= dimension");
    }
    KahanAccumulator sum;
    for (double v : x) {
      if (!(v >= 0.0) || !(v <= 1.0)) {
        throw InvalidInput("FractionalState: coordinates must lie in [0, 1]");
      }
      sum.add(v);
    }
    const double k = static_cast<double>(capacity);
    if (std::abs(sum.value() - k) > kFeasibilitySlack * k) {
      throw InvalidInput("FractionalState: coordinates must sum to capacity");
    }
  }
};

// Integral allocation: exactly `capacity` distinct files, ascending ids.
struct IntegralState {
  std::vector<int> cached;
  int capacity = 0;

  void validate(int n_files) const {
    if (static_cast<int>(cached.size()) != capacity) {
      throw InvalidInput("IntegralState: must cache exactly `capacity` files");
    }
    int prev = -1;
    for (int f : cached) {
      if (f < 0 || f >= n_files) throw InvalidInput("IntegralState: file id out of range");
      if (f <= prev) throw InvalidInput("IntegralState: file ids must be strictly ascending");
      prev = f;
    }
  }
};

inline FractionalState lift(const IntegralState& z, int n_files) {
  FractionalState s;
  s.capacity = z.capacity;
  s.x.assign(static_cast<std::size_t>(n_files), 0.0);
  for (int f : z.cached) s.x[static_cast<std::size_t>(f)] = 1.0;
  return s;
}

// One time slot of requests, stored sparsely: (file id, multiplicity) pairs
// with strictly ascending ids.  batch_size is the declared total R;
// max_multiplicity the declared per-file bound h (counts may be lower).
struct RequestBatch {
  std::vector<std::pair<int, int>> counts;
  int batch_size = 0;
  int max_multiplicity = 1;

  static RequestBatch single(int file) {
    RequestBatch b;
    b.counts = {{file, 1}};
    b.batch_size = 1;
    b.max_multiplicity = 1;
    return b;
  }

  void validate(int n_files) const {
    if (batch_size < 1) throw InvalidInput("RequestBatch: batch size must be positive");
    if (max_multiplicity < 1 || max_multiplicity > batch_size) {
      throw InvalidInput("RequestBatch: need 1 <= max_multiplicity <= batch_size");
    }
    long long total = 0;
    int prev = -1;
    for (const auto& [file, count] : counts) {
      if (file < 0 || file >= n_files) throw InvalidInput("RequestBatch: file id out of range");
      if (file <= prev) throw InvalidInput("RequestBatch: file ids must be strictly ascending");
      if (count < 1 || count > max_multiplicity) {
        throw InvalidInput("RequestBatch: multiplicity outside [1, max_multiplicity]");
      }
      prev = file;
      total += count;
    }
    if (total != batch_size) {
      throw InvalidInput("RequestBatch: multiplicities must sum to batch_size");
    }
  }
};

// Weighted miss cost of serving batch r from allocation x:
//   f_r(x) = sum_i w_i * r_i * (1 - x_i).
inline double service_cost(const RequestBatch& r, const FractionalState& x,
                           const Catalog& cat) {
  double cost = 0.0;
  for (const auto& [file, count] : r.counts) {
    cost += cat.service_cost_w[static_cast<std::size_t>(file)] *
            static_cast<double>(count) * (1.0 - x.x[static_cast<std::size_t>(file)]);
  }
  return cost;
}

inline double service_cost(const RequestBatch& r, const IntegralState& z,
                           const Catalog& cat) {
  double cost = 0.0;
  auto it = z.cached.begin();
  for (const auto& [file, count] : r.counts) {
    while (it != z.cached.end() && *it < file) ++it;
    const bool hit = (it != z.cached.end() && *it == file);
    if (!hit) {
      cost += cat.service_cost_w[static_cast<std::size_t>(file)] *
              static_cast<double>(count);
    }
  }
  return cost;
}

// Cost of moving the cache from `from` to `to` after serving batch r: only
// fetches of files *not* in the batch are charged (requested files arrive for
// free while being served):
//   UC_r(from, to) = sum_{i not in supp(r)} w'_i * max(0, to_i - from_i).
inline double update_cost(const RequestBatch& r, const FractionalState& from,
                          const FractionalState& to, const Catalog& cat) {
  if (from.dim() != to.dim()) {
    throw InvalidInput("update_cost: state dimensions differ");
  }
  double cost = 0.0;
  auto it = r.counts.begin();
  for (int i = 0; i < from.dim(); ++i) {
    while (it != r.counts.end() && it->first < i) ++it;
    if (it != r.counts.end() && it->first == i) continue;
    const double grow = to.x[static_cast<std::size_t>(i)] - from.x[static_cast<std::size_t>(i)];
    if (grow > 0.0) cost += cat.update_cost_w[static_cast<std::size_t>(i)] * grow;
  }
  return cost;
}

inline double update_cost(const RequestBatch& r, const IntegralState& from,
                          const IntegralState& to, const Catalog& cat) {
  const int n = 1 + std::max(from.cached.empty() ? 0 : from.cached.back(),
                             to.cached.empty() ? 0 : to.cached.back());
  return update_cost(r, lift(from, n), lift(to, n), cat);
}

// Request sequence plus the metadata needed to tune and score policies.
// horizon is the slot count used for learning-rate tuning; it usually equals
// the number of batches but is the period length for periodically reset runs.
struct Trace {
  int catalog_size = 0;
  int batch_size = 0;
  int max_multiplicity = 1;
  long long horizon = 0;
  std::vector<RequestBatch> batches;
  // Ground-truth popularity vectors: (first slot they apply to, pmf over
  // files), ascending by slot.  Optional; empty when unknown (ingested logs).
  std::vector<std::pair<long long, std::vector<double>>> popularity;

  long long num_slots() const { return static_cast<long long>(batches.size()); }

  void validate() const {
    if (catalog_size <= 0) throw InvalidInput("Trace: catalog_size must be positive");
    if (horizon < 1) throw InvalidInput("Trace: horizon must be positive");
    for (const RequestBatch& b : batches) {
      if (b.batch_size != batch_size || b.max_multiplicity != max_multiplicity) {
        throw InvalidInput("Trace: batch does not match declared R/h");
      }
      b.validate(catalog_size);
    }
    long long prev = -1;
    for (const auto& [slot, pmf] : popularity) {
      if (slot <= prev) throw InvalidInput("Trace: popularity slots must be ascending");
      if (slot < 0 || slot >= num_slots()) {
        throw InvalidInput("Trace: popularity slot out of range");
      }
      if (static_cast<int>(pmf.size()) != catalog_size) {
        throw InvalidInput("Trace: popularity vector size must match catalog");
      }
      double sum = 0.0;
      for (double p : pmf) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw InvalidInput("Trace: popularity entries must be non-negative");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw InvalidInput("Trace: popularity vector must sum to 1");
      }
      prev = slot;
    }
  }

  // Popularity in force at `slot`: the last entry starting at or before it.
  // Null when no metadata covers the slot.
  const std::vector<double>* popularity_at(long long slot) const {
    const std::vector<double>* found = nullptr;
    for (const auto& [start, pmf] : popularity) {
      if (start > slot) break;
      found = &pmf;
    }
    return found;
  }
};

}  // namespace omdcache
