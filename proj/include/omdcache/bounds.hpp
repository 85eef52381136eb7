#pragma once

#include <cmath>
#include <string>

#include "omdcache/common.hpp"

namespace omdcache {

// Problem constants that determine worst-case regret guarantees.
struct BoundInputs {
  long long catalog_size = 0;   // N
  long long capacity = 0;       // k
  long long batch_size = 1;     // R
  long long max_multiplicity = 1;  // h
  long long horizon = 1;        // T
  double w_max = 1.0;           // largest per-file service cost

  void validate() const {
    if (capacity < 1 || capacity >= catalog_size) {
      throw InvalidInput("BoundInputs: need 1 <= capacity < catalog_size");
    }
    if (max_multiplicity < 1 || batch_size < max_multiplicity) {
      throw InvalidInput("BoundInputs: need 1 <= max_multiplicity <= batch_size");
    }
    if (batch_size > max_multiplicity * catalog_size) {
      throw InvalidInput("BoundInputs: batch_size cannot exceed max_multiplicity * catalog");
    }
    if (horizon < 1) throw InvalidInput("BoundInputs: horizon must be positive");
    if (!(w_max > 0.0) || !std::isfinite(w_max)) {
      throw InvalidInput("BoundInputs: w_max must be positive and finite");
    }
  }
};

// Worst-case regret guarantee of the q-norm gradient scheme with its tuned
// learning rate, 1 < q <= 2.  Stable near q = 1 (the k/N difference is
// evaluated with expm1).
inline double regret_upper_bound(double q, const BoundInputs& in) {
  in.validate();
  if (!(q > 1.0) || !(q <= 2.0)) {
    throw InvalidInput("regret_upper_bound: q must lie in (1, 2]");
  }
  const double n = static_cast<double>(in.catalog_size);
  const double k = static_cast<double>(in.capacity);
  const double ratio = static_cast<double>(in.batch_size) /
                       static_cast<double>(in.max_multiplicity);
  const double t = static_cast<double>(in.horizon);
  const double p = q / (q - 1.0);
  const double a = 2.0 / p;
  // k^{-a} - n^{-a} without cancellation for small a.
  const double diff = std::exp(-a * std::log(k)) * (-std::expm1(-a * std::log(n / k)));
  return in.w_max * static_cast<double>(in.max_multiplicity) * k *
         std::pow(ratio, 1.0 / p) * std::sqrt(diff * t / (q - 1.0));
}

// Limit of the guarantee as q -> 1 (the multiplicative/entropic scheme).
inline double regret_upper_bound_limit(const BoundInputs& in) {
  in.validate();
  const double n = static_cast<double>(in.catalog_size);
  const double k = static_cast<double>(in.capacity);
  const double t = static_cast<double>(in.horizon);
  return in.w_max * static_cast<double>(in.max_multiplicity) * k *
         std::sqrt(2.0 * std::log(n / k) * t);
}

// Guarantee of the earlier single-request analysis (R = h = 1), kept for the
// improvement comparison.
inline double classic_regret_bound(const BoundInputs& in) {
  in.validate();
  const double t = static_cast<double>(in.horizon);
  const double smaller = static_cast<double>(
      std::min(in.capacity, in.catalog_size - in.capacity));
  return in.w_max * std::sqrt(2.0 * smaller * t);
}

// Minimizer of the guarantee over q: dense grid on (1, 2] with step 1e-3
// plus the q -> 1 limit.  Returns the minimizing q, with 1.0 standing for
// the limit.  Ties prefer the largest q (so flat regions report 2).
inline double q_star(const BoundInputs& in) {
  in.validate();
  double best_q = 2.0;
  double best = regret_upper_bound(2.0, in);
  for (int j = 1999; j >= 1001; --j) {
    const double q = static_cast<double>(j) / 1000.0;
    const double ub = regret_upper_bound(q, in);
    if (ub < best) {
      best = ub;
      best_q = q;
    }
  }
  if (regret_upper_bound_limit(in) < best) return 1.0;
  return best_q;
}

// Which scheme the closed-form theory singles out for a batch-to-multiplicity
// ratio; in between the guarantees must be compared numerically (q_star).
enum class QRegime {
  EuclideanOptimal,   // R/h <= k: q = 2 minimizes the guarantee
  EntropyOptimal,     // R/h > 2 sqrt(N k): the q -> 1 limit wins
  NumericComparison,  // neither closed-form condition applies
};

inline QRegime regime(const BoundInputs& in) {
  in.validate();
  const double ratio = static_cast<double>(in.batch_size) /
                       static_cast<double>(in.max_multiplicity);
  if (ratio <= static_cast<double>(in.capacity)) return QRegime::EuclideanOptimal;
  if (ratio > 2.0 * std::sqrt(static_cast<double>(in.catalog_size) *
                              static_cast<double>(in.capacity))) {
    return QRegime::EntropyOptimal;
  }
  return QRegime::NumericComparison;
}

inline std::string to_string(QRegime r) {
  switch (r) {
    case QRegime::EuclideanOptimal: return "euclidean-optimal";
    case QRegime::EntropyOptimal: return "entropy-optimal";
    case QRegime::NumericComparison: return "numeric-comparison";
  }
  return "unknown";
}

}  // namespace omdcache
