#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "omdcache/core.hpp"

namespace omdcache {

// ---------------------------------------------------------------------------
// Euclidean projection onto the capped simplex X = {0 <= x <= 1, sum x = k}.
//
// The projection has the form x_i = clip(y_i - lambda, 0, 1) where lambda is
// the unique root of g(lambda) = sum_i clip(y_i - lambda, 0, 1) = k.  g is
// piecewise linear and non-increasing with breakpoints at y_i and y_i - 1, so
// the root is located exactly by a sort + scan over breakpoints.
// ---------------------------------------------------------------------------

namespace detail {

// Given a candidate clip pattern, iterate "pattern -> lambda -> re-derived
// pattern" to a fixed point, then emit the state.  Both Euclidean paths
// funnel through this; since the iteration forgets how the starting pattern
// was obtained, they agree bit-for-bit whenever the fixed point is unique
// (callers only disagree by boundary coordinates within an ulp of a clip
// threshold, which the re-derivation reclassifies identically).
inline FractionalState finalize_euclid(const std::vector<double>& y, int k,
                                       std::vector<char> at_one,
                                       std::vector<char> at_zero) {
  const std::size_t n = y.size();
  double lambda = 0.0;
  int n_interior = 0;
  for (std::size_t pass = 0; pass <= n; ++pass) {
    double interior_sum = 0.0;
    int n_one = 0;
    n_interior = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (at_one[i]) {
        ++n_one;
      } else if (!at_zero[i]) {
        interior_sum += y[i];
        ++n_interior;
      }
    }
    if (n_interior == 0) break;
    lambda = (interior_sum + static_cast<double>(n_one) - static_cast<double>(k)) /
             static_cast<double>(n_interior);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const char one = (y[i] - lambda >= 1.0) ? 1 : 0;
      const char zero = (!one && y[i] - lambda <= 0.0) ? 1 : 0;
      if (one != at_one[i] || zero != at_zero[i]) changed = true;
      at_one[i] = one;
      at_zero[i] = zero;
    }
    if (!changed) break;
  }
  FractionalState out;
  out.capacity = k;
  out.x.resize(n);
  if (n_interior == 0) {
    // Fully clipped pattern: the state is the pattern itself.
    for (std::size_t i = 0; i < n; ++i) out.x[i] = at_one[i] ? 1.0 : 0.0;
    return out;
  }
  // The clip expression reproduces exact 1.0 / 0.0 on coordinates the pattern
  // pins, so the emission depends on lambda alone.
  for (std::size_t i = 0; i < n; ++i) {
    out.x[i] = std::min(1.0, std::max(0.0, y[i] - lambda));
  }
  return out;
}

}  // namespace detail

inline FractionalState euclid_project(const std::vector<double>& y, int k) {
  const int n = static_cast<int>(y.size());
  if (k < 1 || k > n) throw InvalidInput("euclid_project: need 1 <= k <= dimension");
  for (double v : y) {
    if (!std::isfinite(v)) throw InvalidInput("euclid_project: input must be finite");
  }
  if (k == n) {
    FractionalState out;
    out.capacity = k;
    out.x.assign(y.size(), 1.0);
    return out;
  }

  // Events while lambda sweeps downward: at lambda = y_i the coordinate
  // leaves the zero region; at lambda = y_i - 1 it saturates at one.
  struct Event {
    double at;
    int index;
    bool saturates;
  };
  std::vector<Event> events;
  events.reserve(2 * y.size());
  for (int i = 0; i < n; ++i) {
    events.push_back({y[static_cast<std::size_t>(i)], i, false});
    events.push_back({y[static_cast<std::size_t>(i)] - 1.0, i, true});
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.at > b.at; });

  std::vector<char> at_one(y.size(), 0);
  std::vector<char> at_zero(y.size(), 1);
  int n_one = 0;
  int n_interior = 0;
  KahanAccumulator interior_sum;
  const double target = static_cast<double>(k);

  // Between consecutive events g(lambda) = n_one + interior_sum - n_interior
  // * lambda; test each interval for the root, updating state at each event.
  for (std::size_t e = 0; e <= events.size(); ++e) {
    const double hi = (e == 0) ? std::numeric_limits<double>::infinity() : events[e - 1].at;
    const double lo = (e == events.size()) ? -std::numeric_limits<double>::infinity()
                                           : events[e].at;
    if (n_interior > 0) {
      const double lambda =
          (interior_sum.value() + static_cast<double>(n_one) - target) /
          static_cast<double>(n_interior);
      if (lambda >= lo && lambda <= hi) {
        return detail::finalize_euclid(y, k, at_one, at_zero);
      }
    } else if (n_one == k) {
      // Flat segment already meeting the budget: pattern is final.
      return detail::finalize_euclid(y, k, at_one, at_zero);
    }
    if (e == events.size()) break;
    const Event& ev = events[e];
    const std::size_t i = static_cast<std::size_t>(ev.index);
    if (!ev.saturates) {
      at_zero[i] = 0;
      ++n_interior;
      interior_sum.add(y[i]);
    } else {
      at_one[i] = 1;
      ++n_one;
      --n_interior;
      interior_sum.add(-y[i]);
    }
  }
  throw NumericFailure("euclid_project: no admissible threshold found");
}

// Fast path for the single-file request pattern: y equals a feasible state
// with exactly one coordinate pushed up.  Runs the active-set iteration of
// Michelot (no sort, O(n) per pass, a couple of passes in practice), then
// recomputes lambda exactly like the general path.  If the input does not
// have the promised shape, the general path is used and `fell_back` is set.
struct SingleTouchResult {
  FractionalState state;
  bool fell_back = false;
};

inline SingleTouchResult euclid_project_single(const std::vector<double>& y, int k,
                                               int touched) {
  const int n = static_cast<int>(y.size());
  if (k < 1 || k > n) throw InvalidInput("euclid_project_single: need 1 <= k <= dimension");
  if (touched < 0 || touched >= n) {
    throw InvalidInput("euclid_project_single: touched coordinate out of range");
  }

  // Precondition: subtracting the mass surplus from the touched coordinate
  // must recover a feasible state.
  bool shape_ok = true;
  KahanAccumulator total;
  for (double v : y) {
    if (!std::isfinite(v)) throw InvalidInput("euclid_project_single: input must be finite");
    total.add(v);
  }
  const double surplus = total.value() - static_cast<double>(k);
  const double slack = kFeasibilitySlack * static_cast<double>(k) + 1e-12;
  if (surplus < -slack) shape_ok = false;
  for (int i = 0; i < n && shape_ok; ++i) {
    const double base = (i == touched) ? y[static_cast<std::size_t>(i)] - surplus
                                       : y[static_cast<std::size_t>(i)];
    if (base < -slack || base > 1.0 + slack) shape_ok = false;
  }
  if (!shape_ok) {
    return {euclid_project(y, k), true};
  }
  if (k == n) {
    FractionalState out;
    out.capacity = k;
    out.x.assign(y.size(), 1.0);
    return {out, false};
  }

  // Only the touched coordinate can end up pinned at one: every other
  // coordinate is at most 1 and the threshold only lowers values.  So the
  // problem splits into two cases, each solved by Michelot's sortless
  // active-set iteration for the lower bounds alone.
  std::vector<char> at_one(y.size(), 0);
  std::vector<char> at_zero(y.size(), 0);
  const auto michelot = [&](double budget) {
    // Finds lambda with sum over non-pinned i of max(0, y_i - lambda) ==
    // budget; marks dropped coordinates in at_zero.  lambda only grows
    // across passes, so drops are permanent.
    double lambda = -std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < n + 1; ++pass) {
      double active_sum = 0.0;
      int active = 0;
      for (int i = 0; i < n; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        if (at_one[ui] || at_zero[ui]) continue;
        active_sum += y[ui];
        ++active;
      }
      if (active == 0) break;
      lambda = (active_sum - budget) / static_cast<double>(active);
      bool dropped = false;
      for (int i = 0; i < n; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        if (at_one[ui] || at_zero[ui]) continue;
        if (y[ui] <= lambda) {
          at_zero[ui] = 1;
          dropped = true;
        }
      }
      if (!dropped) break;
    }
    return lambda;
  };

  double lambda = michelot(static_cast<double>(k));
  if (y[static_cast<std::size_t>(touched)] - lambda > 1.0) {
    // Relaxed solution overflows the box: pin the touched coordinate at one
    // and redo the waterfill over the rest.
    std::fill(at_zero.begin(), at_zero.end(), 0);
    at_one[static_cast<std::size_t>(touched)] = 1;
    lambda = michelot(static_cast<double>(k - 1));
    if (y[static_cast<std::size_t>(touched)] - lambda < 1.0 - 1e-9) {
      // Active-set inconsistency (can only arise from degenerate float
      // ties); defer to the general path.
      return {euclid_project(y, k), false};
    }
  }
  return {detail::finalize_euclid(y, k, at_one, at_zero), false};
}

// Projection of x + delta where delta is non-negative and supported on
// `raised` (sorted by coordinate).  Solved in difference form,
//   sum_i (out_i - x_i) = 0  with out_i = clip(value_i - lambda, 0, 1),
// which anchors the result to x's own mass and keeps lambda >= 0, so
// coordinates outside `raised` can only shrink -- never a spurious
// ulp-level increase.  This is the path the gradient policies use.
inline FractionalState euclid_project_after_increase(
    const FractionalState& x, const std::vector<std::pair<int, double>>& raised) {
  const int n = x.dim();
  const int k = x.capacity;
  std::vector<double> y = x.x;
  std::vector<char> touched(y.size(), 0);
  for (const auto& [i, d] : raised) {
    if (i < 0 || i >= n) throw InvalidInput("euclid_project_after_increase: index out of range");
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw InvalidInput("euclid_project_after_increase: increments must be non-negative");
    }
    y[static_cast<std::size_t>(i)] += d;
    touched[static_cast<std::size_t>(i)] = 1;
  }

  // Surplus at lambda = 0; each term is exactly non-negative because
  // x_i <= 1 and y_i >= x_i.
  KahanAccumulator surplus0;
  for (const auto& [i, d] : raised) {
    const std::size_t ui = static_cast<std::size_t>(i);
    surplus0.add(std::min(1.0, y[ui]) - x.x[ui]);
  }
  if (surplus0.value() <= 0.0) {
    FractionalState out = x;
    return out;  // nothing moved (all raised coordinates already saturated)
  }

  // Breakpoints of D(lambda) = sum_i (clip(y_i - lambda, 0, 1) - x_i) for
  // lambda >= 0.  Untouched i is active (slope -1) on [0, x_i); touched i on
  // [max(0, y_i - 1), y_i).
  struct Node {
    double at;
    int slope_change;  // applied when lambda passes `at`
  };
  std::vector<Node> nodes;
  nodes.reserve(y.size() + 2 * raised.size());
  int slope = 0;  // negative count of active coordinates
  for (int i = 0; i < n; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    if (touched[ui]) {
      const double start = y[ui] - 1.0;
      if (start <= 0.0) {
        if (y[ui] > 0.0) {
          --slope;
          nodes.push_back({y[ui], +1});
        }
      } else {
        nodes.push_back({start, -1});
        nodes.push_back({y[ui], +1});
      }
    } else if (x.x[ui] > 0.0) {
      --slope;
      nodes.push_back({x.x[ui], +1});
    }
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const Node& a, const Node& b) { return a.at < b.at; });

  double lambda = 0.0;
  double at = 0.0;
  double d_val = surplus0.value();
  bool found = false;
  for (std::size_t e = 0; e <= nodes.size() && !found; ++e) {
    const double next = (e == nodes.size()) ? std::numeric_limits<double>::infinity()
                                            : nodes[e].at;
    if (slope < 0) {
      const double candidate = at + d_val / static_cast<double>(-slope);
      if (candidate <= next) {
        lambda = candidate;
        found = true;
        break;
      }
    }
    if (e == nodes.size()) break;
    d_val += static_cast<double>(slope) * (next - at);
    at = next;
    slope += nodes[e].slope_change;
  }
  if (!found) {
    throw NumericFailure("euclid_project_after_increase: threshold search failed");
  }
  lambda = std::max(0.0, lambda);

  FractionalState out;
  out.capacity = k;
  out.x.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out.x[i] = std::min(1.0, std::max(0.0, y[i] - lambda));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Negative-entropy Bregman projection onto the capped simplex.
//
// For the mirror map sum_i x_i log x_i the projection of a positive vector y
// is x_i = min(1, m * y_i) with m = e^gamma chosen so the coordinates sum to
// k.  The right m is found by scanning how many of the k largest coordinates
// saturate at one; everything else is a uniform rescale.  Values are kept as
// raw * scale with a shared lazy scale factor, so a projection touches only
// the top-k bookkeeping and the scale -- O(k) amortized work per call when a
// batch contains a single file.
// ---------------------------------------------------------------------------

class NegEntropyScaledVector {
 public:
  NegEntropyScaledVector() = default;

  static NegEntropyScaledVector from_state(const FractionalState& x) {
    return from_vector(x.x, x.capacity);
  }

  static NegEntropyScaledVector from_vector(const std::vector<double>& v, int k) {
    const int n = static_cast<int>(v.size());
    if (k < 1 || k > n) throw InvalidInput("NegEntropyScaledVector: need 1 <= k <= dimension");
    for (double e : v) {
      if (!(e > 0.0) || !std::isfinite(e)) {
        throw InvalidInput("NegEntropyScaledVector: entries must be strictly positive");
      }
    }
    NegEntropyScaledVector s;
    s.k_ = k;
    s.raw_ = v;
    s.scale_ = 1.0;
    s.norm1_ = kahan_sum(v);
    s.in_top_.assign(v.size(), 0);
    std::vector<int> order(v.size());
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return v[static_cast<std::size_t>(a)] > v[static_cast<std::size_t>(b)];
    });
    s.top_.assign(order.begin(), order.begin() + k);
    for (int i : s.top_) s.in_top_[static_cast<std::size_t>(i)] = 1;
    return s;
  }

  int dim() const { return static_cast<int>(raw_.size()); }
  int capacity() const { return k_; }
  double scale() const { return scale_; }
  double norm1() const { return norm1_; }
  double value(int i) const { return raw_[static_cast<std::size_t>(i)] * scale_; }

  // Multiplicative gradient step on one coordinate; factors below 1 would
  // invalidate the top-k bookkeeping and are rejected.
  void multiply(int i, double factor) {
    if (!(factor >= 1.0) || !std::isfinite(factor)) {
      throw InvalidInput("NegEntropyScaledVector::multiply: factor must be >= 1");
    }
    const std::size_t ui = static_cast<std::size_t>(i);
    const double before = raw_[ui] * scale_;
    raw_[ui] *= factor;
    norm1_ += raw_[ui] * scale_ - before;
    reposition(i);
  }

  FractionalState to_state() const {
    FractionalState out;
    out.capacity = k_;
    out.x.resize(raw_.size());
    for (std::size_t i = 0; i < raw_.size(); ++i) {
      out.x[i] = std::min(1.0, std::max(0.0, raw_[i] * scale_));
    }
    return out;
  }

  // In-place Bregman projection; see the class comment.  After the call the
  // effective values are feasible and norm1() == capacity exactly.
  void project() {
    const int n = dim();
    const double k = static_cast<double>(k_);
    if (k_ == n) {
      for (double& r : raw_) r = 1.0;
      scale_ = 1.0;
      norm1_ = k;
      return;
    }

    // The projection can only shrink when the mass available at m = 1 --
    // everything above the caps forfeited -- already covers k.  (The uncapped
    // total proves nothing: mass parked above the caps can force the interior
    // to grow.)  Under this certificate the rescale is pinned at or below 1,
    // which keeps untouched coordinates bitwise fixed on the gradient-step
    // hot path, where bookkeeping noise could otherwise nudge the multiplier
    // a few ulp above 1.
    KahanAccumulator capped;
    for (int i = 0; i < n; ++i) capped.add(std::min(1.0, value(i)));
    const bool shrinking = capped.value() >= k * (1.0 - kFeasibilitySlack);

    double top_effective = 0.0;  // sum of the j largest effective values
    int found = -1;
    double m = 0.0;
    for (int j = 0; j < k_; ++j) {
      const double denom = norm1_ - top_effective;
      if (denom > 0.0) {
        double cand = (k - static_cast<double>(j)) / denom;
        if (shrinking) cand = std::min(cand, 1.0);
        const double below = value(top_[static_cast<std::size_t>(j)]) * cand;
        const bool upper_ok =
            (j == 0) || value(top_[static_cast<std::size_t>(j - 1)]) * cand >= 1.0;
        // A coordinate landing exactly on the cap may stay interior (the
        // emitted value is 1 either way), so the tie is admissible; demanding
        // strict slack here can strand the scan when float noise then breaks
        // the saturation test at the next level.
        if (below <= 1.0 && upper_ok) {
          found = j;
          m = cand;
          break;
        }
      }
      top_effective += value(top_[static_cast<std::size_t>(j)]);
    }
    if (found < 0) {
      throw NumericFailure("negentropy_project: no admissible saturation level");
    }

    const double new_scale = scale_ * m;
    for (int j = 0; j < found; ++j) {
      raw_[static_cast<std::size_t>(top_[static_cast<std::size_t>(j)])] = 1.0 / new_scale;
    }
    scale_ = new_scale;
    norm1_ = k;
    if (scale_ < 1e-150 || scale_ > 1e150) renormalize();
  }

 private:
  void reposition(int i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    const double r = raw_[ui];
    if (in_top_[ui]) {
      auto it = std::find(top_.begin(), top_.end(), i);
      top_.erase(it);
    } else {
      const double tail = raw_[static_cast<std::size_t>(top_.back())];
      if (r <= tail) return;  // still dominated by the incumbent top-k
      in_top_[static_cast<std::size_t>(top_.back())] = 0;
      top_.pop_back();
      in_top_[ui] = 1;
    }
    auto pos = std::lower_bound(top_.begin(), top_.end(), r, [&](int a, double v) {
      return raw_[static_cast<std::size_t>(a)] > v;
    });
    top_.insert(pos, i);
  }

  void renormalize() {
    for (double& r : raw_) r *= scale_;
    scale_ = 1.0;
  }

  std::vector<double> raw_;
  double scale_ = 1.0;
  double norm1_ = 0.0;
  std::vector<int> top_;
  std::vector<char> in_top_;
  int k_ = 0;
};

inline FractionalState negentropy_project(NegEntropyScaledVector& y) {
  y.project();
  return y.to_state();
}

inline FractionalState negentropy_project(const std::vector<double>& y, int k) {
  NegEntropyScaledVector s = NegEntropyScaledVector::from_vector(y, k);
  return negentropy_project(s);
}

// Projection onto the delta-interior {delta <= x_i <= 1, sum x = k}:
// project onto the full set, then repeatedly raise sub-delta coordinates to
// delta and rescale the rest to restore the budget.  This clamp-and-rescale
// is a stand-in for the exact Bregman projection onto the shrunk set; it
// keeps every coordinate a factor delta away from the zero boundary.
inline FractionalState negentropy_project_delta(const std::vector<double>& y, int k,
                                                double delta) {
  const int n = static_cast<int>(y.size());
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw InvalidInput("negentropy_project_delta: delta must be positive");
  }
  if (delta * static_cast<double>(n) >= static_cast<double>(k)) {
    throw InvalidInput("negentropy_project_delta: delta * dimension must stay below capacity");
  }
  FractionalState state = negentropy_project(y, k);

  std::vector<char> clamped(state.x.size(), 0);
  int n_clamped = 0;
  for (int round = 0; round < n; ++round) {
    bool new_clamp = false;
    for (std::size_t i = 0; i < state.x.size(); ++i) {
      if (!clamped[i] && state.x[i] < delta) {
        clamped[i] = 1;
        state.x[i] = delta;
        ++n_clamped;
        new_clamp = true;
      }
    }
    if (!new_clamp) break;
    KahanAccumulator free_mass;
    for (std::size_t i = 0; i < state.x.size(); ++i) {
      if (!clamped[i]) free_mass.add(state.x[i]);
    }
    const double target = static_cast<double>(k) - delta * static_cast<double>(n_clamped);
    const double rho = target / free_mass.value();
    for (std::size_t i = 0; i < state.x.size(); ++i) {
      if (!clamped[i]) state.x[i] = std::min(1.0, state.x[i] * rho);
    }
  }
  return state;
}

// ---------------------------------------------------------------------------
// q-norm mirror map, 1 < q < 2: Phi(x) = 0.5 * ||x||_q^2.
//
// The gradient map and its inverse are the classic norm-duality pair; both
// are instances of v -> sign(v) |v|^{r-1} / ||v||_r^{r-2}.  They are
// evaluated in log space so exponents like 1/(q-1) ~ 1e4 (q close to 1) do
// not overflow.
// ---------------------------------------------------------------------------

namespace detail {

inline double log_norm(const std::vector<double>& v, double r) {
  // log ||v||_r via logsumexp over r * log|v_i|.
  double biggest = -std::numeric_limits<double>::infinity();
  for (double e : v) {
    if (e != 0.0) biggest = std::max(biggest, r * std::log(std::abs(e)));
  }
  if (biggest == -std::numeric_limits<double>::infinity()) {
    return -std::numeric_limits<double>::infinity();  // zero vector
  }
  double acc = 0.0;
  for (double e : v) {
    if (e != 0.0) acc += std::exp(r * std::log(std::abs(e)) - biggest);
  }
  return (biggest + std::log(acc)) / r;
}

inline std::vector<double> norm_dual_map(const std::vector<double>& v, double r) {
  std::vector<double> out(v.size(), 0.0);
  const double ln_norm = log_norm(v, r);
  if (ln_norm == -std::numeric_limits<double>::infinity()) return out;  // maps 0 to 0
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    const double magnitude =
        std::exp((r - 1.0) * std::log(std::abs(v[i])) - (r - 2.0) * ln_norm);
    out[i] = v[i] > 0.0 ? magnitude : -magnitude;
  }
  return out;
}

}  // namespace detail

inline void check_qnorm_exponent(double q) {
  if (!(q > 1.0) || !(q < 2.0)) {
    throw InvalidInput("q-norm mirror map: q must lie strictly in (1, 2)");
  }
}

// Gradient of Phi at x.
inline std::vector<double> qnorm_dual_map(const std::vector<double>& x, double q) {
  check_qnorm_exponent(q);
  return detail::norm_dual_map(x, q);
}

// Inverse gradient map; p is the conjugate exponent of q.
inline std::vector<double> qnorm_primal_map(const std::vector<double>& xhat, double q) {
  check_qnorm_exponent(q);
  const double p = q / (q - 1.0);
  return detail::norm_dual_map(xhat, p);
}

// Bregman divergence induced by the q-norm map (used by the projection and
// its tests).
inline double qnorm_bregman(const std::vector<double>& x, const std::vector<double>& y,
                            double q) {
  check_qnorm_exponent(q);
  const double nx = std::exp(detail::log_norm(x, q));
  const double ny = std::exp(detail::log_norm(y, q));
  const std::vector<double> grad = detail::norm_dual_map(y, q);
  double inner = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) inner += grad[i] * (x[i] - y[i]);
  return 0.5 * nx * nx - 0.5 * ny * ny - inner;
}

// Bregman projection onto the capped simplex under the q-norm map, computed
// by a dual solve of the KKT system: interior coordinates satisfy
//   x_i = ((c_i - lambda) / s)^{1/(q-1)},  c = grad Phi(y),  s = ||x||_q^{2-q},
// clipped to [0, 1].  lambda is bisected for a given s; s is resolved by a
// scan-plus-bisection on the consistency equation.  Near-feasible inputs are
// fast-pathed through the Euclidean projection (they move by at most the
// feasibility defect, and the result is exactly feasible).
inline FractionalState qnorm_project_numeric(const std::vector<double>& y, int k,
                                             double q, double tolerance = 1e-7) {
  check_qnorm_exponent(q);
  const int n = static_cast<int>(y.size());
  if (k < 1 || k > n) throw InvalidInput("qnorm_project_numeric: need 1 <= k <= dimension");
  for (double v : y) {
    if (!std::isfinite(v)) throw InvalidInput("qnorm_project_numeric: input must be finite");
  }

  {
    bool near_feasible = true;
    KahanAccumulator sum;
    for (double v : y) {
      if (v < -tolerance || v > 1.0 + tolerance) {
        near_feasible = false;
        break;
      }
      sum.add(v);
    }
    if (near_feasible &&
        std::abs(sum.value() - static_cast<double>(k)) <= tolerance * static_cast<double>(k)) {
      return euclid_project(y, k);
    }
  }
  if (k == n) {
    FractionalState out;
    out.capacity = k;
    out.x.assign(y.size(), 1.0);
    return out;
  }

  const std::vector<double> c = qnorm_dual_map(y, q);
  const double exponent = 1.0 / (q - 1.0);
  double c_max = c[0], c_min = c[0];
  for (double v : c) {
    c_max = std::max(c_max, v);
    c_min = std::min(c_min, v);
  }

  const auto solve_for_s = [&](double s, std::vector<double>* x_out) {
    // Bisection on lambda: sum_i x_i(lambda) = k, non-increasing in lambda.
    const double log_s = std::log(s);
    const auto fill = [&](double lambda, std::vector<double>& x) {
      for (int i = 0; i < n; ++i) {
        const double gap = c[static_cast<std::size_t>(i)] - lambda;
        double v = 0.0;
        if (gap > 0.0) {
          const double t = exponent * (std::log(gap) - log_s);
          v = t >= 0.0 ? 1.0 : std::exp(t);
        }
        x[static_cast<std::size_t>(i)] = v;
      }
    };
    double lo = c_min - s, hi = c_max;
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int iter = 0; iter < 200 && hi - lo > 1e-16 * (1.0 + std::abs(hi)); ++iter) {
      const double mid = 0.5 * (lo + hi);
      fill(mid, x);
      if (kahan_sum(x) >= static_cast<double>(k)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    fill(0.5 * (lo + hi), x);
    if (x_out) *x_out = x;
    return std::exp((2.0 - q) * detail::log_norm(x, q));  // ||x||_q^{2-q}
  };

  // Bracket s over the range the q-norm can take on the feasible set
  // (uniform state minimizes it, an integral state maximizes it), widened
  // for safety, then locate a sign change of s - ||x(s)||^{2-q}.
  const double kk = static_cast<double>(k);
  double s_lo = 0.5 * std::pow(kk * std::pow(static_cast<double>(n), 1.0 / q - 1.0), 2.0 - q);
  double s_hi = 2.0 * std::pow(std::pow(kk, 1.0 / q), 2.0 - q);
  const auto residual = [&](double s) { return s - solve_for_s(s, nullptr); };

  double a = s_lo, b = s_hi;
  bool bracketed = false;
  for (int pieces : {64, 1024}) {
    double prev_s = s_lo;
    double prev_r = residual(prev_s);
    for (int j = 1; j <= pieces; ++j) {
      const double cur_s = s_lo + (s_hi - s_lo) * static_cast<double>(j) /
                                      static_cast<double>(pieces);
      const double cur_r = residual(cur_s);
      if ((prev_r <= 0.0 && cur_r >= 0.0) || (prev_r >= 0.0 && cur_r <= 0.0)) {
        a = prev_s;
        b = cur_s;
        bracketed = true;
        break;
      }
      prev_s = cur_s;
      prev_r = cur_r;
    }
    if (bracketed) break;
  }
  if (!bracketed) {
    throw NumericFailure("qnorm_project_numeric: consistency equation has no bracket");
  }
  double ra = residual(a);
  for (int iter = 0; iter < 200 && b - a > 1e-15 * (1.0 + b); ++iter) {
    const double mid = 0.5 * (a + b);
    const double rm = residual(mid);
    if ((ra <= 0.0) == (rm <= 0.0)) {
      a = mid;
      ra = rm;
    } else {
      b = mid;
    }
  }

  std::vector<double> x;
  solve_for_s(0.5 * (a + b), &x);
  KahanAccumulator check;
  for (double v : x) check.add(v);
  if (std::abs(check.value() - kk) > tolerance * std::max(1.0, kk)) {
    throw NumericFailure("qnorm_project_numeric: residual " +
                         std::to_string(std::abs(check.value() - kk)) +
                         " exceeds tolerance");
  }
  // The dual solve lands within `tolerance` of the feasible set; snap onto it
  // exactly (the nearest feasible point moves each coordinate by at most the
  // residual).
  return euclid_project(x, k);
}

}  // namespace omdcache
