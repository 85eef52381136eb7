#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "omdcache/bounds.hpp"
#include "omdcache/common.hpp"

using namespace omdcache;

namespace {

BoundInputs make_inputs(long long n, long long k, long long r, long long h, long long t,
                        double w) {
  BoundInputs in;
  in.catalog_size = n;
  in.capacity = k;
  in.batch_size = r;
  in.max_multiplicity = h;
  in.horizon = t;
  in.w_max = w;
  return in;
}

// Straightforward transcription of the guarantee, written independently with
// plain pow calls (safe away from q = 1).
double plain_bound(double q, const BoundInputs& in) {
  const double n = static_cast<double>(in.catalog_size);
  const double k = static_cast<double>(in.capacity);
  const double ratio =
      static_cast<double>(in.batch_size) / static_cast<double>(in.max_multiplicity);
  const double t = static_cast<double>(in.horizon);
  const double p = q / (q - 1.0);
  const double diff = std::pow(k, -2.0 / p) - std::pow(n, -2.0 / p);
  return in.w_max * static_cast<double>(in.max_multiplicity) * k * std::pow(ratio, 1.0 / p) *
         std::sqrt(diff * t / (q - 1.0));
}

}  // namespace

TEST_CASE("guarantee formula matches an independent transcription") {
  RandomSource rng(501);
  for (int trial = 0; trial < 100; ++trial) {
    const long long n = 3 + static_cast<long long>(rng.below(500));
    const long long k = 1 + static_cast<long long>(rng.below(static_cast<std::uint64_t>(n - 1)));
    const long long h = 1 + static_cast<long long>(rng.below(4));
    const long long r = h * (1 + static_cast<long long>(rng.below(static_cast<std::uint64_t>(n))));
    const long long t = 1 + static_cast<long long>(rng.below(1000000));
    const double w = 0.25 + 4.0 * rng.uniform();
    const BoundInputs in = make_inputs(n, k, r, h, t, w);
    for (double q : {1.2, 1.4, 1.6, 1.8, 2.0}) {
      REQUIRE_THAT(regret_upper_bound(q, in),
                   Catch::Matchers::WithinRel(plain_bound(q, in), 1e-10));
    }
  }
}

TEST_CASE("guarantee hand values") {
  const BoundInputs in = make_inputs(200, 10, 1, 1, 100000, 1.0);
  REQUIRE_THAT(regret_upper_bound(2.0, in),
               Catch::Matchers::WithinRel(std::sqrt(10.0 * 0.95 * 1e5), 1e-12));
  REQUIRE_THAT(regret_upper_bound_limit(in),
               Catch::Matchers::WithinRel(10.0 * std::sqrt(2.0 * std::log(20.0) * 1e5), 1e-12));
  REQUIRE_THAT(classic_regret_bound(in),
               Catch::Matchers::WithinRel(std::sqrt(2.0 * 10.0 * 1e5), 1e-12));
}

TEST_CASE("guarantee is continuous at the q -> 1 limit") {
  for (auto [n, k, r, h] : {std::array<long long, 4>{200, 10, 1, 1},
                            std::array<long long, 4>{100, 7, 30, 1},
                            std::array<long long, 4>{50, 3, 8, 2}}) {
    const BoundInputs in = make_inputs(n, k, r, h, 10000, 1.5);
    REQUIRE_THAT(regret_upper_bound(1.0 + 1e-6, in),
                 Catch::Matchers::WithinRel(regret_upper_bound_limit(in), 1e-3));
  }
}

TEST_CASE("guarantee scales with the square root of the horizon") {
  RandomSource rng(502);
  for (int trial = 0; trial < 30; ++trial) {
    const long long n = 3 + static_cast<long long>(rng.below(300));
    const long long k = 1 + static_cast<long long>(rng.below(static_cast<std::uint64_t>(n - 1)));
    const long long t = 1 + static_cast<long long>(rng.below(100000));
    BoundInputs in = make_inputs(n, k, 1, 1, t, 1.0);
    BoundInputs in4 = in;
    in4.horizon = 4 * t;
    for (double q : {1.1, 1.5, 2.0}) {
      REQUIRE_THAT(regret_upper_bound(q, in4),
                   Catch::Matchers::WithinRel(2.0 * regret_upper_bound(q, in), 1e-9));
    }
    REQUIRE_THAT(regret_upper_bound_limit(in4),
                 Catch::Matchers::WithinRel(2.0 * regret_upper_bound_limit(in), 1e-9));
  }
}

TEST_CASE("guarantee is non-increasing in q when the diversity ratio is small") {
  RandomSource rng(503);
  for (int trial = 0; trial < 100; ++trial) {
    const long long n = 4 + static_cast<long long>(rng.below(200));
    const long long k = 2 + static_cast<long long>(rng.below(static_cast<std::uint64_t>(n - 2)));
    const long long r = 1 + static_cast<long long>(rng.below(static_cast<std::uint64_t>(k)));
    const BoundInputs in = make_inputs(n, k, r, 1, 5000, 1.0);
    REQUIRE(static_cast<double>(r) <= static_cast<double>(k));
    double prev = regret_upper_bound(1.001, in);
    for (int j = 1002; j <= 2000; ++j) {
      const double cur = regret_upper_bound(static_cast<double>(j) / 1000.0, in);
      REQUIRE(cur <= prev + 1e-9 * (1.0 + prev));
      prev = cur;
    }
  }
}

TEST_CASE("single-request guarantee improves on the classic one by sqrt(2)") {
  RandomSource rng(504);
  const double root2 = std::sqrt(2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const long long n = 3 + static_cast<long long>(rng.below(400));
    const long long k = 1 + static_cast<long long>(rng.below(static_cast<std::uint64_t>(n - 1)));
    const long long t = 1 + static_cast<long long>(rng.below(100000));
    const BoundInputs in = make_inputs(n, k, 1, 1, t, 0.5 + rng.uniform());
    REQUIRE(classic_regret_bound(in) / regret_upper_bound(2.0, in) >= root2 - 1e-12);
  }
}

TEST_CASE("best exponent: small ratios pick 2, large ratios pick the limit") {
  auto inputs = [](long long r) { return make_inputs(100, 7, r, 1, 10000, 1.0); };

  for (long long r : {1, 3, 5, 7}) REQUIRE(q_star(inputs(r)) == 2.0);
  for (long long r : {56, 60, 80, 100}) REQUIRE(q_star(inputs(r)) == 1.0);

  // The switch happens strictly between the two closed-form regimes, passing
  // through interior exponents.
  bool seen_interior = false;
  double prev = 2.0;
  for (long long r = 8; r <= 55; ++r) {
    const double qs = q_star(inputs(r));
    REQUIRE(qs >= 1.0);
    REQUIRE(qs <= 2.0);
    REQUIRE(qs <= prev + 1e-12);  // never switches back upward
    if (qs > 1.0 && qs < 2.0) seen_interior = true;
    prev = qs;
  }
  REQUIRE(seen_interior);
  REQUIRE(prev == 1.0);

  // Deterministic: repeated evaluation gives the identical exponent.
  REQUIRE(q_star(inputs(40)) == q_star(inputs(40)));
}

TEST_CASE("regime classification follows the closed-form conditions") {
  REQUIRE(regime(make_inputs(200, 10, 1, 1, 100, 1.0)) == QRegime::EuclideanOptimal);
  REQUIRE(regime(make_inputs(100, 7, 7, 1, 100, 1.0)) == QRegime::EuclideanOptimal);  // inclusive
  REQUIRE(regime(make_inputs(100, 7, 20, 1, 100, 1.0)) == QRegime::NumericComparison);
  REQUIRE(regime(make_inputs(10000, 25, 5000, 2, 100, 1.0)) == QRegime::EntropyOptimal);
  REQUIRE(to_string(QRegime::EuclideanOptimal) == "euclidean-optimal");
  REQUIRE(to_string(QRegime::EntropyOptimal) == "entropy-optimal");
  REQUIRE(to_string(QRegime::NumericComparison) == "numeric-comparison");
}

TEST_CASE("bound inputs and exponents are validated") {
  REQUIRE_THROWS_AS(make_inputs(10, 0, 1, 1, 10, 1.0).validate(), InvalidInput);
  REQUIRE_THROWS_AS(make_inputs(10, 10, 1, 1, 10, 1.0).validate(), InvalidInput);
  REQUIRE_THROWS_AS(make_inputs(10, 2, 1, 2, 10, 1.0).validate(), InvalidInput);
  REQUIRE_THROWS_AS(make_inputs(10, 2, 25, 2, 10, 1.0).validate(), InvalidInput);
  REQUIRE_THROWS_AS(make_inputs(10, 2, 1, 1, 0, 1.0).validate(), InvalidInput);
  REQUIRE_THROWS_AS(make_inputs(10, 2, 1, 1, 10, -1.0).validate(), InvalidInput);

  const BoundInputs ok = make_inputs(10, 2, 1, 1, 10, 1.0);
  REQUIRE_NOTHROW(ok.validate());
  REQUIRE_THROWS_AS(regret_upper_bound(1.0, ok), InvalidInput);
  REQUIRE_THROWS_AS(regret_upper_bound(2.5, ok), InvalidInput);
}
