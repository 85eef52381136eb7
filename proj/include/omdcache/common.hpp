#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace omdcache {

// Malformed arguments, configs, or trace files.  The CLI maps this to exit
// code 1.
class InvalidInput : public std::runtime_error {
 public:
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

// An iterative solver failed to reach its tolerance, or a closed-form step
// produced no admissible solution.  The CLI maps this to exit code 2.
class NumericFailure : public std::runtime_error {
 public:
  explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

// Relative slack allowed on the capacity constraint sum(x) == k.  States are
// accepted (and emitted) as feasible when |sum(x) - k| <= slack * k.
inline constexpr double kFeasibilitySlack = 1e-9;

// Deterministic random stream built directly on mt19937_64, whose output
// sequence is fixed by the standard.  The standard *distributions* are
// implementation-defined, so uniform/normal/shuffle are derived here by hand;
// a seeded run therefore reproduces byte-identical artifacts on any platform.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); exact zeros (probability 2^-53) are redrawn.
  double uniform_open() {
    double u = uniform();
    while (u == 0.0) u = uniform();
    return u;
  }

  // Uniform integer in [0, n); rejection sampling avoids modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw InvalidInput("RandomSource::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = gen_();
    while (v >= limit) v = gen_();
    return v % n;
  }

  // Standard normal via Box-Muller; pairs are cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Compensated (Kahan) summation; keeps long accumulations accurate to a few
// ulps independent of length.
class KahanAccumulator {
 public:
  void add(double v) {
    const double y = v - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double kahan_sum(const std::vector<double>& v) {
  KahanAccumulator acc;
  for (double x : v) acc.add(x);
  return acc.value();
}

}  // namespace omdcache
