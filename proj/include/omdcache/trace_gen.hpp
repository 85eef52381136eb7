#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "omdcache/common.hpp"
#include "omdcache/core.hpp"

namespace omdcache {

// ---------------------------------------------------------------------------
// Synthetic request traces.  All generators are deterministic given the
// spec (including the seed): same inputs give byte-identical traces on any
// platform.
// ---------------------------------------------------------------------------

enum class TraceKind {
  FixedZipf,                // R = 1, stationary Zipf popularity
  BatchedZipf,              // R >= 1 iid draws per slot, stationary
  PartialPopularityChange,  // every `period` slots, swap top and bottom files
  GlobalPopularityChange,   // every `period` slots, circularly shift the pmf
};

struct GeneratorSpec {
  TraceKind kind = TraceKind::FixedZipf;
  int catalog_size = 0;
  double zipf_alpha = 0.8;
  int batch_size = 1;
  long long num_batches = 0;
  // Regret/learning-rate horizon recorded in the trace header; 0 derives it
  // (num_batches for stationary kinds, `period` for changing ones).
  long long horizon = 0;
  std::uint64_t seed = 1;
  long long period = 0;        // slots between popularity changes
  long long shift_step = 0;    // global shift amount; 0 means catalog_size / 4
  double swap_fraction = 0.05; // share of the catalog swapped per change

  void validate() const {
    if (catalog_size < 1) throw InvalidInput("GeneratorSpec: catalog_size must be >= 1");
    if (!(zipf_alpha >= 0.0) || !std::isfinite(zipf_alpha)) {
      throw InvalidInput("GeneratorSpec: zipf_alpha must be finite and >= 0");
    }
    if (batch_size < 1) throw InvalidInput("GeneratorSpec: batch_size must be >= 1");
    if (num_batches < 1) throw InvalidInput("GeneratorSpec: num_batches must be >= 1");
    if (horizon < 0) throw InvalidInput("GeneratorSpec: horizon must be >= 0");
    const bool changing = kind == TraceKind::PartialPopularityChange ||
                          kind == TraceKind::GlobalPopularityChange;
    if (changing && period < 1) {
      throw InvalidInput("GeneratorSpec: changing-popularity kinds need period >= 1");
    }
    if (kind == TraceKind::FixedZipf && batch_size != 1) {
      throw InvalidInput("GeneratorSpec: FixedZipf uses batch_size == 1");
    }
    if (kind == TraceKind::PartialPopularityChange) {
      if (!(swap_fraction > 0.0) || swap_fraction > 0.5) {
        throw InvalidInput("GeneratorSpec: swap_fraction must lie in (0, 0.5]");
      }
    }
    if (shift_step < 0 || shift_step >= catalog_size) {
      throw InvalidInput("GeneratorSpec: shift_step must lie in [0, catalog_size)");
    }
  }
};

inline std::vector<double> zipf_pmf(int n, double alpha) {
  if (n < 1) throw InvalidInput("zipf_pmf: n must be >= 1");
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    p[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i + 1), -alpha);
  }
  const double z = kahan_sum(p);
  for (double& v : p) v /= z;
  return p;
}

// Inverse-CDF sampler over a fixed pmf.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(const std::vector<double>& pmf) : cdf_(pmf.size()) {
    if (pmf.empty()) throw InvalidInput("CategoricalSampler: empty pmf");
    KahanAccumulator acc;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      if (!(pmf[i] >= 0.0) || !std::isfinite(pmf[i])) {
        throw InvalidInput("CategoricalSampler: pmf entries must be finite and >= 0");
      }
      acc.add(pmf[i]);
      cdf_[i] = acc.value();
    }
    if (acc.value() <= 0.0) throw InvalidInput("CategoricalSampler: pmf sums to zero");
    cdf_.back() = std::max(cdf_.back(), 1.0);
  }

  int draw(RandomSource& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t idx = std::min<std::size_t>(
        static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    return static_cast<int>(idx);
  }

 private:
  std::vector<double> cdf_;
};

namespace detail {

// Swap the popularity mass of the s most popular files with the s least
// popular ones (pairwise: rank j from the top exchanges with rank j from
// the bottom).  Ranking ties resolve to the lower file id.
inline void swap_top_bottom(std::vector<double>& pmf, double swap_fraction) {
  const int n = static_cast<int>(pmf.size());
  const int s = static_cast<int>(swap_fraction * static_cast<double>(n));
  if (s < 1) return;
  std::vector<int> order(pmf.size());
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return pmf[static_cast<std::size_t>(a)] > pmf[static_cast<std::size_t>(b)];
  });
  for (int j = 0; j < s; ++j) {
    const int hi = order[static_cast<std::size_t>(j)];
    const int lo = order[static_cast<std::size_t>(n - 1 - j)];
    std::swap(pmf[static_cast<std::size_t>(hi)], pmf[static_cast<std::size_t>(lo)]);
  }
}

inline void circular_shift(std::vector<double>& pmf, long long step) {
  const long long n = static_cast<long long>(pmf.size());
  step %= n;
  if (step == 0) return;
  std::vector<double> next(pmf.size());
  for (long long i = 0; i < n; ++i) {
    next[static_cast<std::size_t>(i)] = pmf[static_cast<std::size_t>((i + step) % n)];
  }
  pmf = std::move(next);
}

}  // namespace detail

inline Trace generate_trace(const GeneratorSpec& spec) {
  spec.validate();
  const int n = spec.catalog_size;
  RandomSource rng(spec.seed);

  std::vector<double> pmf = zipf_pmf(n, spec.zipf_alpha);
  const bool changing = spec.kind == TraceKind::PartialPopularityChange ||
                        spec.kind == TraceKind::GlobalPopularityChange;
  const long long shift = spec.shift_step > 0
                              ? spec.shift_step
                              : std::max<long long>(1, static_cast<long long>(n) / 4);

  Trace trace;
  trace.catalog_size = n;
  trace.batch_size = spec.batch_size;
  trace.batches.reserve(static_cast<std::size_t>(spec.num_batches));
  trace.popularity.emplace_back(0, pmf);

  CategoricalSampler sampler(pmf);
  int max_count = 1;
  std::vector<int> scratch(static_cast<std::size_t>(n), 0);

  for (long long s = 0; s < spec.num_batches; ++s) {
    if (changing && s > 0 && s % spec.period == 0) {
      if (spec.kind == TraceKind::PartialPopularityChange) {
        detail::swap_top_bottom(pmf, spec.swap_fraction);
      } else {
        detail::circular_shift(pmf, shift);
      }
      trace.popularity.emplace_back(s, pmf);
      sampler = CategoricalSampler(pmf);
    }

    RequestBatch batch;
    batch.batch_size = spec.batch_size;
    for (int d = 0; d < spec.batch_size; ++d) ++scratch[static_cast<std::size_t>(sampler.draw(rng))];
    for (int i = 0; i < n; ++i) {
      if (scratch[static_cast<std::size_t>(i)] > 0) {
        batch.counts.emplace_back(i, scratch[static_cast<std::size_t>(i)]);
        max_count = std::max(max_count, scratch[static_cast<std::size_t>(i)]);
        scratch[static_cast<std::size_t>(i)] = 0;
      }
    }
    trace.batches.push_back(std::move(batch));
  }

  trace.max_multiplicity = max_count;
  for (RequestBatch& b : trace.batches) b.max_multiplicity = max_count;
  trace.horizon = spec.horizon > 0 ? spec.horizon
                                   : (changing ? spec.period : spec.num_batches);
  trace.validate();
  return trace;
}

// ---------------------------------------------------------------------------
// Raw-log ingestion: one request id per line (arbitrary strings).  Keeps the
// `top_m` most frequent ids (frequency ties keep the earlier first
// appearance), maps survivors to dense indices in first-seen order, and
// packs consecutive surviving requests into batches of `batch_size`,
// dropping a final partial batch.
// ---------------------------------------------------------------------------

struct IngestResult {
  Trace trace;
  long long skipped_lines = 0;      // blank/whitespace-only lines
  long long dropped_requests = 0;   // truncated ids + final partial batch
};

inline IngestResult ingest_raw_log(const std::vector<std::string>& lines, int batch_size,
                                   int top_m, long long horizon = 0) {
  if (batch_size < 1) throw InvalidInput("ingest_raw_log: batch_size must be >= 1");
  if (top_m < 1) throw InvalidInput("ingest_raw_log: top_m must be >= 1");
  if (horizon < 0) throw InvalidInput("ingest_raw_log: horizon must be >= 0");

  IngestResult out;
  std::vector<std::string> requests;
  requests.reserve(lines.size());
  for (const std::string& raw : lines) {
    std::size_t b = raw.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
      ++out.skipped_lines;
      continue;
    }
    std::size_t e = raw.find_last_not_of(" \t\r\n");
    requests.push_back(raw.substr(b, e - b + 1));
  }
  if (requests.empty()) throw InvalidInput("ingest_raw_log: no usable request lines");

  // Pass 1: frequencies and first-appearance order.
  std::unordered_map<std::string, long long> freq;
  std::unordered_map<std::string, long long> first_seen;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    auto [it, fresh] = freq.try_emplace(requests[i], 0);
    ++it->second;
    if (fresh) first_seen.emplace(requests[i], static_cast<long long>(i));
  }

  std::vector<const std::string*> ids;
  ids.reserve(freq.size());
  for (const auto& kv : freq) ids.push_back(&kv.first);
  std::sort(ids.begin(), ids.end(), [&](const std::string* a, const std::string* b) {
    const long long fa = freq.at(*a), fb = freq.at(*b);
    if (fa != fb) return fa > fb;
    return first_seen.at(*a) < first_seen.at(*b);
  });
  if (static_cast<long long>(ids.size()) > top_m) ids.resize(static_cast<std::size_t>(top_m));
  std::unordered_map<std::string, int> keep;
  for (const std::string* id : ids) keep.emplace(*id, -1);

  // Pass 2: dense mapping by first-seen order among survivors, batch packing.
  int next_id = 0;
  Trace& trace = out.trace;
  std::map<int, int> current;
  int in_batch = 0;
  int max_count = 1;
  for (const std::string& req : requests) {
    auto it = keep.find(req);
    if (it == keep.end()) {
      ++out.dropped_requests;
      continue;
    }
    if (it->second < 0) it->second = next_id++;
    ++current[it->second];
    if (++in_batch == batch_size) {
      RequestBatch batch;
      batch.batch_size = batch_size;
      batch.counts.assign(current.begin(), current.end());
      for (const auto& [file, count] : batch.counts) max_count = std::max(max_count, count);
      trace.batches.push_back(std::move(batch));
      current.clear();
      in_batch = 0;
    }
  }
  out.dropped_requests += in_batch;

  if (trace.batches.empty()) {
    throw InvalidInput("ingest_raw_log: fewer surviving requests than one batch");
  }
  trace.catalog_size = next_id;
  trace.batch_size = batch_size;
  trace.max_multiplicity = max_count;
  for (RequestBatch& b : trace.batches) b.max_multiplicity = max_count;
  trace.horizon = horizon > 0 ? horizon : trace.num_slots();
  trace.validate();
  return out;
}

}  // namespace omdcache
