#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "omdcache/bounds.hpp"
#include "omdcache/core.hpp"
#include "omdcache/projections.hpp"

namespace omdcache {

// ---------------------------------------------------------------------------
// Mirror maps and learning-rate schedules for the gradient caching policies.
// ---------------------------------------------------------------------------

enum class MirrorMapKind {
  Euclidean,        // 0.5 ||x||_2^2: additive updates
  QNorm,            // 0.5 ||x||_q^2, 1 < q < 2: interpolates the two extremes
  NegEntropy,       // sum x log x: multiplicative updates
  NegEntropyDelta,  // multiplicative updates confined to x_i >= delta
};

struct MirrorMap {
  MirrorMapKind kind = MirrorMapKind::Euclidean;
  double q = 2.0;       // QNorm only
  double delta = 1e-4;  // NegEntropyDelta only

  static MirrorMap euclidean() { return {MirrorMapKind::Euclidean, 2.0, 0.0}; }
  static MirrorMap qnorm(double q) {
    check_qnorm_exponent(q);
    return {MirrorMapKind::QNorm, q, 0.0};
  }
  static MirrorMap negentropy() { return {MirrorMapKind::NegEntropy, 1.0, 0.0}; }
  static MirrorMap negentropy_delta(double delta = 1e-4) {
    if (!(delta > 0.0) || !(delta < 1.0)) {
      throw InvalidInput("MirrorMap: delta must lie in (0, 1)");
    }
    return {MirrorMapKind::NegEntropyDelta, 1.0, delta};
  }
};

// Learning-rate schedules.  TheoryOptimal derives the horizon-tuned constant
// rate from the problem constants; Diminishing uses value / sqrt(t) with
// value defaulting to the theory rate evaluated at horizon 1.
struct LearningSchedule {
  enum class Kind { Fixed, TheoryOptimal, Diminishing };
  Kind kind = Kind::TheoryOptimal;
  double value = 0.0;

  static LearningSchedule fixed(double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw InvalidInput("LearningSchedule: fixed rate must be positive");
    }
    return {Kind::Fixed, eta};
  }
  static LearningSchedule theory() { return {Kind::TheoryOptimal, 0.0}; }
  static LearningSchedule diminishing(double eta0 = 0.0) {
    return {Kind::Diminishing, eta0};
  }
};

// Horizon-tuned learning rate for the q-norm family, 1 < q <= 2 (q = 2 is
// the additive scheme and uses its dedicated closed form).
inline double theory_learning_rate_qnorm(double q, const BoundInputs& in) {
  in.validate();
  if (!(q > 1.0) || !(q <= 2.0)) {
    throw InvalidInput("theory_learning_rate_qnorm: q must lie in (1, 2]");
  }
  const double n = static_cast<double>(in.catalog_size);
  const double k = static_cast<double>(in.capacity);
  const double h = static_cast<double>(in.max_multiplicity);
  const double r = static_cast<double>(in.batch_size);
  const double t = static_cast<double>(in.horizon);
  if (q == 2.0) {
    return std::sqrt(k * (1.0 - k / n) / (in.w_max * in.w_max * h * r * t));
  }
  const double p = q / (q - 1.0);
  const double a = 2.0 / p;
  const double diff = std::exp(-a * std::log(k)) * (-std::expm1(-a * std::log(n / k)));
  return std::sqrt((q - 1.0) * k * k * diff /
                   (in.w_max * in.w_max * h * h * std::pow(r / h, a) * t));
}

inline double theory_learning_rate(const MirrorMap& map, const BoundInputs& in) {
  in.validate();
  switch (map.kind) {
    case MirrorMapKind::Euclidean:
      return theory_learning_rate_qnorm(2.0, in);
    case MirrorMapKind::QNorm:
      return theory_learning_rate_qnorm(map.q, in);
    case MirrorMapKind::NegEntropy:
    case MirrorMapKind::NegEntropyDelta: {
      const double n = static_cast<double>(in.catalog_size);
      const double k = static_cast<double>(in.capacity);
      const double h = static_cast<double>(in.max_multiplicity);
      return std::sqrt(2.0 * std::log(n / k) /
                       (in.w_max * in.w_max * h * h * static_cast<double>(in.horizon)));
    }
  }
  throw InvalidInput("theory_learning_rate: unknown mirror map");
}

// Rate in force at 1-based slot t.
inline double schedule_rate(const LearningSchedule& schedule, const MirrorMap& map,
                            const BoundInputs& in, long long t) {
  switch (schedule.kind) {
    case LearningSchedule::Kind::Fixed:
      return schedule.value;
    case LearningSchedule::Kind::TheoryOptimal:
      return theory_learning_rate(map, in);
    case LearningSchedule::Kind::Diminishing: {
      double eta0 = schedule.value;
      if (eta0 <= 0.0) {
        BoundInputs unit = in;
        unit.horizon = 1;
        eta0 = theory_learning_rate(map, unit);
      }
      return eta0 / std::sqrt(static_cast<double>(t));
    }
  }
  throw InvalidInput("schedule_rate: unknown schedule");
}

// All maps share the same starting point: the uniform allocation (it
// minimizes every map in the family over the feasible set).
inline FractionalState initial_state(int n, int k) { return FractionalState::uniform(n, k); }

// ---------------------------------------------------------------------------
// One online gradient update.  The cost gradient of batch r is
// -(w_i r_i)_i, supported on the batch, so the dual step adds eta * w_i *
// r_i to the requested coordinates (additively or multiplicatively according
// to the map) and the result is projected back.
// ---------------------------------------------------------------------------

inline FractionalState omd_step(const FractionalState& x, const RequestBatch& r,
                                const Catalog& cat, const MirrorMap& map, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw InvalidInput("omd_step: learning rate must be positive and finite");
  }
  r.validate(x.dim());

  switch (map.kind) {
    case MirrorMapKind::Euclidean: {
      std::vector<std::pair<int, double>> raised;
      raised.reserve(r.counts.size());
      for (const auto& [file, count] : r.counts) {
        raised.emplace_back(
            file, eta * cat.service_cost_w[static_cast<std::size_t>(file)] *
                      static_cast<double>(count));
      }
      return euclid_project_after_increase(x, raised);
    }
    case MirrorMapKind::QNorm: {
      std::vector<double> dual = qnorm_dual_map(x.x, map.q);
      for (const auto& [file, count] : r.counts) {
        dual[static_cast<std::size_t>(file)] +=
            eta * cat.service_cost_w[static_cast<std::size_t>(file)] *
            static_cast<double>(count);
      }
      const std::vector<double> primal = qnorm_primal_map(dual, map.q);
      return qnorm_project_numeric(primal, x.capacity, map.q);
    }
    case MirrorMapKind::NegEntropy: {
      NegEntropyScaledVector v = NegEntropyScaledVector::from_state(x);
      for (const auto& [file, count] : r.counts) {
        const double expo = eta * cat.service_cost_w[static_cast<std::size_t>(file)] *
                            static_cast<double>(count);
        if (expo > 700.0) {
          throw NumericFailure("omd_step: multiplicative exponent overflows");
        }
        v.multiply(file, std::exp(expo));
      }
      return negentropy_project(v);
    }
    case MirrorMapKind::NegEntropyDelta: {
      std::vector<double> y = x.x;
      for (const auto& [file, count] : r.counts) {
        const double expo = eta * cat.service_cost_w[static_cast<std::size_t>(file)] *
                            static_cast<double>(count);
        if (expo > 700.0) {
          throw NumericFailure("omd_step: multiplicative exponent overflows");
        }
        y[static_cast<std::size_t>(file)] *= std::exp(expo);
      }
      return negentropy_project_delta(y, x.capacity, map.delta);
    }
  }
  throw InvalidInput("omd_step: unknown mirror map");
}

// Stateful wrapper that keeps the multiplicative scheme in its lazily scaled
// representation across slots (per-slot work proportional to the batch
// support plus top-k upkeep, not the catalog).
class GradientPolicy {
 public:
  GradientPolicy(const MirrorMap& map, const Catalog& cat, int k)
      : map_(map), cat_(cat), k_(k) {
    cat_.validate();
    reset(initial_state(cat_.n_files, k));
  }

  const MirrorMap& map() const { return map_; }

  void reset(const FractionalState& s) {
    s.validate();
    if (static_cast<int>(s.x.size()) != cat_.n_files || s.capacity != k_) {
      throw InvalidInput("GradientPolicy: reset state does not match catalog and capacity");
    }
    if (map_.kind == MirrorMapKind::NegEntropy) {
      lazy_ = NegEntropyScaledVector::from_state(s);
    } else {
      dense_ = s;
    }
  }

  FractionalState state() const {
    return map_.kind == MirrorMapKind::NegEntropy ? lazy_.to_state() : dense_;
  }

  // Value of one coordinate without materializing the whole state.
  double value(int i) const {
    return map_.kind == MirrorMapKind::NegEntropy
               ? std::min(1.0, lazy_.value(i))
               : dense_.x[static_cast<std::size_t>(i)];
  }

  void step(const RequestBatch& r, double eta) {
    if (map_.kind == MirrorMapKind::NegEntropy) {
      for (const auto& [file, count] : r.counts) {
        const double expo = eta * cat_.service_cost_w[static_cast<std::size_t>(file)] *
                            static_cast<double>(count);
        if (expo > 700.0) {
          throw NumericFailure("GradientPolicy: multiplicative exponent overflows");
        }
        lazy_.multiply(file, std::exp(expo));
      }
      lazy_.project();
    } else {
      dense_ = omd_step(dense_, r, cat_, map_, eta);
    }
  }

 private:
  MirrorMap map_;
  Catalog cat_;
  int k_ = 0;
  FractionalState dense_;
  NegEntropyScaledVector lazy_;
};

// ---------------------------------------------------------------------------
// Follow-the-leader: cache the k files with the largest weighted request
// mass seen so far.  Ties resolve to the lowest file id.
// ---------------------------------------------------------------------------

inline IntegralState top_k_indices(const std::vector<double>& score, int k) {
  const int n = static_cast<int>(score.size());
  if (k < 1 || k > n) throw InvalidInput("top_k_indices: need 1 <= k <= dimension");
  std::vector<int> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
  });
  IntegralState z;
  z.capacity = k;
  z.cached.assign(order.begin(), order.begin() + k);
  std::sort(z.cached.begin(), z.cached.end());
  return z;
}

class FollowTheLeader {
 public:
  FollowTheLeader(const Catalog& cat, int k) : cat_(cat), k_(k) {
    score_.assign(static_cast<std::size_t>(cat.n_files), 0.0);
  }

  IntegralState state() const { return top_k_indices(score_, k_); }

  void observe(const RequestBatch& r) {
    for (const auto& [file, count] : r.counts) {
      score_[static_cast<std::size_t>(file)] +=
          cat_.service_cost_w[static_cast<std::size_t>(file)] *
          static_cast<double>(count);
    }
  }

 private:
  Catalog cat_;
  int k_;
  std::vector<double> score_;
};

}  // namespace omdcache
