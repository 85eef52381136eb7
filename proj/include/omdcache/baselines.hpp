#pragma once

#include <algorithm>
#include <deque>
#include <list>
#include <unordered_map>
#include <vector>

#include "omdcache/core.hpp"
#include "omdcache/policies.hpp"

namespace omdcache {

// ---------------------------------------------------------------------------
// Streaming eviction caches.  These serve one request at a time: a miss
// costs the file's service weight and the file is then inserted, evicting a
// resident file when the cache is full.
//
//   LRU        evicts the least recently used resident.
//   LFU        evicts the resident with the smallest all-time request count.
//   WindowLFU  LFU over the last `window` requests only (window 0 means
//              unbounded, which makes it identical to LFU).
//
// Frequency ties evict the lowest file id, so runs are deterministic.
// ---------------------------------------------------------------------------

class EvictionCache {
 public:
  enum class Variant { LRU, LFU, WindowLFU };

  EvictionCache(Variant variant, int n_files, int k, long long window = 0)
      : variant_(variant), n_(n_files), k_(k), window_(window) {
    if (n_files < 1 || k < 1 || k > n_files) {
      throw InvalidInput("EvictionCache: need 1 <= k <= n_files");
    }
    if (window < 0) throw InvalidInput("EvictionCache: window must be non-negative");
    resident_.assign(static_cast<std::size_t>(n_files), 0);
    if (variant != Variant::LRU) counts_.assign(static_cast<std::size_t>(n_files), 0);
  }

  // Serves one request; returns true on a hit.
  bool access(int file) {
    if (file < 0 || file >= n_) throw InvalidInput("EvictionCache: file id out of range");
    const std::size_t uf = static_cast<std::size_t>(file);

    if (variant_ != Variant::LRU) {
      ++counts_[uf];
      if (variant_ == Variant::WindowLFU && window_ > 0) {
        recent_.push_back(file);
        if (static_cast<long long>(recent_.size()) > window_) {
          --counts_[static_cast<std::size_t>(recent_.front())];
          recent_.pop_front();
        }
      }
    }

    if (resident_[uf]) {
      if (variant_ == Variant::LRU) {
        order_.splice(order_.begin(), order_, where_[file]);
      }
      return true;
    }

    if (size_ == k_) evict();
    resident_[uf] = 1;
    ++size_;
    if (variant_ == Variant::LRU) {
      order_.push_front(file);
      where_[file] = order_.begin();
    }
    return false;
  }

  bool resident(int file) const { return resident_[static_cast<std::size_t>(file)] != 0; }

  std::vector<int> resident_set() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size_));
    for (int i = 0; i < n_; ++i) {
      if (resident_[static_cast<std::size_t>(i)]) out.push_back(i);
    }
    return out;
  }

  int occupancy() const { return size_; }

 private:
  void evict() {
    if (variant_ == Variant::LRU) {
      const int victim = order_.back();
      order_.pop_back();
      where_.erase(victim);
      resident_[static_cast<std::size_t>(victim)] = 0;
    } else {
      int victim = -1;
      for (int i = 0; i < n_; ++i) {
        if (!resident_[static_cast<std::size_t>(i)]) continue;
        if (victim < 0 || counts_[static_cast<std::size_t>(i)] <
                              counts_[static_cast<std::size_t>(victim)]) {
          victim = i;
        }
      }
      resident_[static_cast<std::size_t>(victim)] = 0;
    }
    --size_;
  }

  Variant variant_;
  int n_;
  int k_;
  long long window_;
  int size_ = 0;
  std::vector<char> resident_;
  // LRU bookkeeping.
  std::list<int> order_;
  std::unordered_map<int, std::list<int>::iterator> where_;
  // LFU bookkeeping.
  std::vector<long long> counts_;
  std::deque<int> recent_;
};

// Serve a whole slot through an eviction cache: the batch is expanded into
// individual requests in ascending file order (optionally shuffled) and the
// weighted miss costs are summed.
inline double serve_batch(EvictionCache& cache, const RequestBatch& r, const Catalog& cat,
                          RandomSource* shuffle_rng = nullptr) {
  std::vector<int> stream;
  stream.reserve(static_cast<std::size_t>(r.batch_size));
  for (const auto& [file, count] : r.counts) {
    for (int c = 0; c < count; ++c) stream.push_back(file);
  }
  if (shuffle_rng != nullptr) shuffle_rng->shuffle(stream);
  double cost = 0.0;
  for (int file : stream) {
    if (!cache.access(file)) cost += cat.service_cost_w[static_cast<std::size_t>(file)];
  }
  return cost;
}

// ---------------------------------------------------------------------------
// Perturbed leader: cache the top-k files ranked by request count plus a
// Gaussian perturbation whose magnitude grows like sqrt(t).  The noise
// vector is drawn once per run.
// ---------------------------------------------------------------------------

inline IntegralState perturbed_leader_state(const std::vector<double>& counts,
                                            const std::vector<double>& noise,
                                            double alpha, long long t, int k) {
  if (counts.size() != noise.size()) {
    throw InvalidInput("perturbed_leader_state: counts and noise sizes differ");
  }
  if (t < 1) throw InvalidInput("perturbed_leader_state: slot index must be >= 1");
  std::vector<double> score(counts.size());
  const double magnitude = alpha * std::sqrt(static_cast<double>(t));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    score[i] = counts[i] + magnitude * noise[i];
  }
  return top_k_indices(score, k);
}

class PerturbedLeader {
 public:
  PerturbedLeader(int n, int k, double alpha, RandomSource& rng) : k_(k), alpha_(alpha) {
    if (n < 1 || k < 1 || k > n) throw InvalidInput("PerturbedLeader: need 1 <= k <= n");
    counts_.assign(static_cast<std::size_t>(n), 0.0);
    noise_.resize(static_cast<std::size_t>(n));
    for (double& g : noise_) g = rng.normal();
  }

  // State chosen before serving 1-based slot t.
  IntegralState state(long long t) const {
    return perturbed_leader_state(counts_, noise_, alpha_, t, k_);
  }

  void observe(const RequestBatch& r) {
    for (const auto& [file, count] : r.counts) {
      counts_[static_cast<std::size_t>(file)] += static_cast<double>(count);
    }
  }

  const std::vector<double>& noise() const { return noise_; }

 private:
  int k_;
  double alpha_;
  std::vector<double> counts_;
  std::vector<double> noise_;
};

// ---------------------------------------------------------------------------
// Hindsight benchmarks.
// ---------------------------------------------------------------------------

// Best fixed set of k files over the first `slots` batches (the whole trace
// when slots < 0): maximizes retained weighted request mass.
inline IntegralState best_static(const Trace& trace, const Catalog& cat, int k,
                                 long long slots = -1) {
  if (slots < 0 || slots > trace.num_slots()) slots = trace.num_slots();
  std::vector<double> score(static_cast<std::size_t>(trace.catalog_size), 0.0);
  for (long long s = 0; s < slots; ++s) {
    for (const auto& [file, count] : trace.batches[static_cast<std::size_t>(s)].counts) {
      score[static_cast<std::size_t>(file)] +=
          cat.service_cost_w[static_cast<std::size_t>(file)] * static_cast<double>(count);
    }
  }
  return top_k_indices(score, k);
}

// Clairvoyant per-slot benchmark: the top-k of the popularity vector in
// force at the slot, weighted by service cost.  Requires popularity
// metadata covering the slot.
inline IntegralState best_dynamic_state(const Trace& trace, const Catalog& cat, int k,
                                        long long slot) {
  const std::vector<double>* pmf = trace.popularity_at(slot);
  if (pmf == nullptr) {
    throw InvalidInput("best_dynamic_state: no popularity metadata covers slot " +
                       std::to_string(slot));
  }
  std::vector<double> score(pmf->size());
  for (std::size_t i = 0; i < pmf->size(); ++i) {
    score[i] = cat.service_cost_w[i] * (*pmf)[i];
  }
  return top_k_indices(score, k);
}

}  // namespace omdcache
