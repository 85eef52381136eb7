#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "omdcache/policies.hpp"

using namespace omdcache;

namespace {

RequestBatch random_batch(RandomSource& rng, int n, int max_r, int max_h) {
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  const int r = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_r)));
  int placed = 0;
  while (placed < r) {
    const int f = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (counts[static_cast<std::size_t>(f)] < max_h) {
      ++counts[static_cast<std::size_t>(f)];
      ++placed;
    }
  }
  RequestBatch b;
  int seen_h = 1;
  for (int i = 0; i < n; ++i) {
    if (counts[static_cast<std::size_t>(i)] > 0) {
      b.counts.emplace_back(i, counts[static_cast<std::size_t>(i)]);
      seen_h = std::max(seen_h, counts[static_cast<std::size_t>(i)]);
    }
  }
  b.batch_size = r;
  b.max_multiplicity = seen_h;
  return b;
}

}  // namespace

TEST_CASE("gradient step: hand examples") {
  const Catalog cat = Catalog::uniform(2);
  const FractionalState x = FractionalState::uniform(2, 1);

  const FractionalState g =
      omd_step(x, RequestBatch::single(0), cat, MirrorMap::euclidean(), 0.2);
  REQUIRE(g.x[0] == 0.6);
  REQUIRE(g.x[1] == 0.4);

  const FractionalState m =
      omd_step(x, RequestBatch::single(0), cat, MirrorMap::negentropy(), std::log(2.0));
  REQUIRE_THAT(m.x[0], Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
  REQUIRE_THAT(m.x[1], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));

  // Service weights scale the gradient.
  Catalog weighted = Catalog::uniform(2);
  weighted.service_cost_w = {2.0, 1.0};
  const FractionalState w =
      omd_step(x, RequestBatch::single(0), weighted, MirrorMap::euclidean(), 0.1);
  REQUIRE(w.x[0] == 0.6);

  REQUIRE_THROWS_AS(omd_step(x, RequestBatch::single(0), cat, MirrorMap::euclidean(), 0.0),
                    InvalidInput);
  REQUIRE_THROWS_AS(omd_step(x, RequestBatch::single(0), cat, MirrorMap::euclidean(), -1.0),
                    InvalidInput);
}

TEST_CASE("updates toward requested files are free, exactly") {
  RandomSource rng(201);
  const int steps = 2000;
  for (const MirrorMap& map : {MirrorMap::euclidean(), MirrorMap::negentropy()}) {
    const int n = 3 + static_cast<int>(rng.below(30));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
    Catalog cat = Catalog::uniform(n);
    for (int i = 0; i < n; ++i) {
      cat.service_cost_w[static_cast<std::size_t>(i)] = 0.5 + rng.uniform();
      cat.update_cost_w[static_cast<std::size_t>(i)] = 0.5 + rng.uniform();
    }
    GradientPolicy pol(map, cat, k);
    pol.reset(initial_state(n, k));
    for (int s = 0; s < steps; ++s) {
      const RequestBatch r = random_batch(rng, n, 4, 2);
      const FractionalState before = pol.state();
      pol.step(r, 0.01 + 0.2 * rng.uniform());
      const double uc = update_cost(r, before, pol.state(), cat);
      REQUIRE(uc == 0.0);
    }
  }
}

TEST_CASE("lazy multiplicative chain tracks the dense one") {
  RandomSource rng(202);
  const int n = 30, k = 5, steps = 2000;
  const Catalog cat = Catalog::uniform(n);

  GradientPolicy lazy(MirrorMap::negentropy(), cat, k);
  lazy.reset(initial_state(n, k));
  std::vector<double> dense = initial_state(n, k).x;

  double worst = 0.0;
  for (int s = 0; s < steps; ++s) {
    const RequestBatch r = RequestBatch::single(static_cast<int>(rng.below(n)));
    const double eta = 0.05;
    lazy.step(r, eta);
    for (const auto& [file, count] : r.counts) {
      dense[static_cast<std::size_t>(file)] *= std::exp(eta * count);
    }
    dense = negentropy_project(dense, k).x;
    const FractionalState got = lazy.state();
    for (int i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(got.x[static_cast<std::size_t>(i)] -
                                       dense[static_cast<std::size_t>(i)]));
    }
  }
  REQUIRE(worst <= 1e-6);
}

TEST_CASE("tuned learning rates match their closed forms") {
  BoundInputs in;
  in.catalog_size = 200;
  in.capacity = 10;
  in.batch_size = 1;
  in.max_multiplicity = 1;
  in.horizon = 100000;

  const double eta_euclid = theory_learning_rate(MirrorMap::euclidean(), in);
  REQUIRE_THAT(eta_euclid, Catch::Matchers::WithinAbs(9.7467943448e-3, 1e-10));

  const double eta_ne = theory_learning_rate(MirrorMap::negentropy(), in);
  REQUIRE_THAT(eta_ne, Catch::Matchers::WithinAbs(7.7404551e-3, 1e-8));

  // The q-norm family at q == 2 lands exactly on the euclidean form.
  REQUIRE(theory_learning_rate_qnorm(2.0, in) == eta_euclid);

  // Interior-clamped entropy shares the entropy rate.
  REQUIRE(theory_learning_rate(MirrorMap::negentropy_delta(1e-4), in) == eta_ne);

  // Larger batches slow the step down.
  BoundInputs batched = in;
  batched.batch_size = 50;
  REQUIRE(theory_learning_rate(MirrorMap::euclidean(), batched) < eta_euclid);

  BoundInputs bad = in;
  bad.capacity = 200;
  REQUIRE_THROWS_AS(theory_learning_rate(MirrorMap::euclidean(), bad), InvalidInput);
}

TEST_CASE("learning-rate schedules") {
  BoundInputs in;
  in.catalog_size = 20;
  in.capacity = 2;
  in.batch_size = 1;
  in.max_multiplicity = 1;
  in.horizon = 100;

  const MirrorMap map = MirrorMap::euclidean();
  REQUIRE(schedule_rate(LearningSchedule::fixed(0.125), map, in, 57) == 0.125);
  REQUIRE(schedule_rate(LearningSchedule::theory(), map, in, 1) ==
          schedule_rate(LearningSchedule::theory(), map, in, 99));

  const double eta0 = schedule_rate(LearningSchedule::diminishing(0.5), map, in, 1);
  REQUIRE(eta0 == 0.5);
  REQUIRE(schedule_rate(LearningSchedule::diminishing(0.5), map, in, 4) == 0.25);

  // Default starting rate: the tuned rate for a one-slot horizon.
  BoundInputs unit = in;
  unit.horizon = 1;
  REQUIRE(schedule_rate(LearningSchedule::diminishing(), map, in, 1) ==
          theory_learning_rate(map, unit));

  REQUIRE_THROWS_AS(LearningSchedule::fixed(0.0), InvalidInput);
  REQUIRE_THROWS_AS(LearningSchedule::fixed(-2.0), InvalidInput);
}

TEST_CASE("mirror map factories validate their parameters") {
  REQUIRE_THROWS_AS(MirrorMap::qnorm(1.0), InvalidInput);
  REQUIRE_THROWS_AS(MirrorMap::qnorm(2.0), InvalidInput);
  REQUIRE_NOTHROW(MirrorMap::qnorm(1.0 + 1e-6));
  REQUIRE_THROWS_AS(MirrorMap::negentropy_delta(0.0), InvalidInput);
  REQUIRE_THROWS_AS(MirrorMap::negentropy_delta(1.0), InvalidInput);
}

TEST_CASE("multiplicative steps refuse overflowing exponents") {
  const Catalog cat = Catalog::uniform(3);
  const FractionalState x = FractionalState::uniform(3, 1);
  REQUIRE_THROWS_AS(
      omd_step(x, RequestBatch::single(0), cat, MirrorMap::negentropy(), 1e4),
      NumericFailure);
}

TEST_CASE("q-norm policy stays feasible along a run") {
  RandomSource rng(203);
  const int n = 12, k = 3;
  const Catalog cat = Catalog::uniform(n);
  GradientPolicy pol(MirrorMap::qnorm(1.3), cat, k);
  pol.reset(initial_state(n, k));
  for (int s = 0; s < 100; ++s) {
    pol.step(random_batch(rng, n, 3, 2), 0.05);
    REQUIRE_NOTHROW(pol.state().validate());
  }
}

TEST_CASE("entropy and a barely-curved q-norm walk in lockstep") {
  // With capacity 1 the q-norm update at rate eta*(q-1) approaches the
  // multiplicative update at rate eta as q -> 1.
  RandomSource rng(204);
  const int n = 10, k = 1, steps = 100;
  const double q = 1.0 + 1e-4;
  const double eta = 0.05;
  const Catalog cat = Catalog::uniform(n);

  GradientPolicy ne(MirrorMap::negentropy(), cat, k);
  ne.reset(initial_state(n, k));
  GradientPolicy qn(MirrorMap::qnorm(q), cat, k);
  qn.reset(initial_state(n, k));

  double worst = 0.0;
  for (int s = 0; s < steps; ++s) {
    const RequestBatch r = RequestBatch::single(static_cast<int>(rng.below(n)));
    ne.step(r, eta);
    qn.step(r, eta * (q - 1.0));
    const FractionalState a = ne.state();
    const FractionalState b = qn.state();
    for (int i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(a.x[static_cast<std::size_t>(i)] -
                                       b.x[static_cast<std::size_t>(i)]));
    }
  }
  REQUIRE(worst <= 1e-3);
}

TEST_CASE("top-k selection breaks ties toward low indices") {
  const IntegralState z = top_k_indices({1.0, 3.0, 3.0, 1.0, 3.0}, 2);
  REQUIRE(z.cached == std::vector<int>{1, 2});
  const IntegralState all_tied = top_k_indices({2.0, 2.0, 2.0}, 2);
  REQUIRE(all_tied.cached == std::vector<int>{0, 1});
  REQUIRE_THROWS_AS(top_k_indices({1.0}, 2), InvalidInput);
}

TEST_CASE("leader tracking weights requests by service cost") {
  Catalog cat = Catalog::uniform(3);
  cat.service_cost_w = {1.0, 10.0, 1.0};
  FollowTheLeader pol(cat, 1);
  RequestBatch heavy;
  heavy.counts = {{0, 3}};
  heavy.batch_size = 3;
  heavy.max_multiplicity = 3;
  pol.observe(heavy);
  pol.observe(RequestBatch::single(1));
  // 3 requests at weight 1 lose to 1 request at weight 10.
  REQUIRE(pol.state().cached == std::vector<int>{1});
}

TEST_CASE("gradient policy validates resets") {
  const Catalog cat = Catalog::uniform(4);
  GradientPolicy pol(MirrorMap::euclidean(), cat, 2);
  pol.reset(initial_state(4, 2));
  REQUIRE_THROWS_AS(pol.reset(initial_state(3, 2)), InvalidInput);
  FractionalState bad = initial_state(4, 2);
  bad.x[0] = 2.0;
  REQUIRE_THROWS_AS(pol.reset(bad), InvalidInput);

  for (int i = 0; i < 4; ++i) REQUIRE(pol.value(i) == 0.5);
}
