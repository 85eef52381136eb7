#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>
#include <vector>

#include "omdcache/harness.hpp"
#include "omdcache/trace_gen.hpp"

using namespace omdcache;

namespace {

Trace small_trace(long long batches, int n, int r, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.kind = r == 1 ? TraceKind::FixedZipf : TraceKind::BatchedZipf;
  spec.catalog_size = n;
  spec.zipf_alpha = 0.9;
  spec.batch_size = r;
  spec.num_batches = batches;
  spec.seed = seed;
  return generate_trace(spec);
}

RunRecord hand_record() {
  RunRecord rec;
  rec.policy_id = "demo";
  rec.batch_size = 2;
  rec.service_costs = {2.0, 4.0, 6.0};
  rec.update_costs = {1.0, 0.0, 3.0};
  rec.comparator_costs = {1.0, 1.0, 1.0};
  return rec;
}

}  // namespace

TEST_CASE("prefix metrics: hand values and range checks") {
  const RunRecord rec = hand_record();
  REQUIRE(average_cost(rec, 2) == 1.5);          // (2+4) / (2 requests * 2 slots)
  REQUIRE(average_cost(rec, 3) == 2.0);
  REQUIRE(moving_average_cost(rec, 3, 2) == 2.5);  // last two slots only
  REQUIRE(moving_average_cost(rec, 2, 5) == 1.5);  // window clamps to t
  REQUIRE(time_averaged_regret(rec, 3) == 3.0);    // (1 + 3 + 5) / 3
  REQUIRE(cumulative_update_cost(rec, 2) == 1.0);
  REQUIRE(cumulative_update_cost(rec, 3) == 4.0);

  REQUIRE_THROWS_AS(average_cost(rec, 0), InvalidInput);
  REQUIRE_THROWS_AS(average_cost(rec, 4), InvalidInput);
  REQUIRE_THROWS_AS(moving_average_cost(rec, 2, 0), InvalidInput);
  RunRecord bad = rec;
  bad.update_costs.pop_back();
  REQUIRE_THROWS_AS(average_cost(bad, 1), InvalidInput);
}

TEST_CASE("hindsight-best policy has exactly zero regret against itself") {
  const Trace t = small_trace(150, 12, 3, 21);
  const Catalog cat = Catalog::uniform(12);
  PolicyConfig cfg;
  cfg.id = "best-static";
  cfg.capacity = 4;
  const RunRecord rec = run_experiment(t, cat, cfg);
  for (long long u = 1; u <= rec.num_slots(); ++u) {
    REQUIRE(time_averaged_regret(rec, u) == 0.0);
  }
  for (double uc : rec.update_costs) REQUIRE(uc == 0.0);
}

TEST_CASE("prefix comparator recomputes the best static set per slot") {
  const Trace t = small_trace(60, 8, 2, 22);
  Catalog cat = Catalog::uniform(8);
  cat.service_cost_w = {1.0, 2.0, 0.5, 1.5, 1.0, 3.0, 0.25, 1.0};
  PolicyConfig cfg;
  cfg.id = "lru";
  cfg.capacity = 3;
  cfg.comparator = ComparatorMode::Prefix;
  const RunRecord rec = run_experiment(t, cat, cfg);

  // Independent re-derivation.
  std::vector<double> score(8, 0.0);
  for (long long s = 0; s < t.num_slots(); ++s) {
    const RequestBatch& r = t.batches[static_cast<std::size_t>(s)];
    for (const auto& [file, count] : r.counts) {
      score[static_cast<std::size_t>(file)] +=
          cat.service_cost_w[static_cast<std::size_t>(file)] * count;
    }
    const IntegralState best = top_k_indices(score, 3);
    REQUIRE(rec.comparator_costs[static_cast<std::size_t>(s)] == service_cost(r, best, cat));
  }
}

TEST_CASE("windowed frequency eviction with a full-trace window matches plain LFU") {
  const Trace t = small_trace(200, 10, 3, 23);
  const Catalog cat = Catalog::uniform(10);
  PolicyConfig lfu;
  lfu.id = "lfu";
  lfu.capacity = 3;
  PolicyConfig wlfu = lfu;
  wlfu.id = "wlfu";
  wlfu.window = 0;  // defaults to horizon * batch_size, covering the whole trace
  REQUIRE(run_experiment(t, cat, lfu).service_costs ==
          run_experiment(t, cat, wlfu).service_costs);
}

TEST_CASE("experiment runner rejects bad configurations") {
  const Trace t = small_trace(10, 5, 1, 24);
  const Catalog cat = Catalog::uniform(5);
  PolicyConfig cfg;
  cfg.capacity = 2;

  cfg.id = "nonsense";
  REQUIRE_THROWS_AS(run_experiment(t, cat, cfg), InvalidInput);
  cfg.id = "lru";
  cfg.rounding = RoundingScheme::Coupled;
  REQUIRE_THROWS_AS(run_experiment(t, cat, cfg), InvalidInput);
  cfg.rounding = RoundingScheme::None;
  cfg.capacity = 0;
  REQUIRE_THROWS_AS(run_experiment(t, cat, cfg), InvalidInput);
  cfg.capacity = 6;
  REQUIRE_THROWS_AS(run_experiment(t, cat, cfg), InvalidInput);
  cfg.capacity = 2;
  REQUIRE_THROWS_AS(run_experiment(t, Catalog::uniform(4), cfg), InvalidInput);
}

TEST_CASE("a constant fractional state pays nothing under a shared threshold") {
  const Trace t = small_trace(200, 5, 1, 25);
  const Catalog cat = Catalog::uniform(5);
  PolicyConfig cfg;
  cfg.id = "constant-uniform";
  cfg.capacity = 2;

  cfg.rounding = RoundingScheme::Coupled;
  const RunRecord coupled = run_experiment(t, cat, cfg);
  REQUIRE(cumulative_update_cost(coupled, coupled.num_slots()) == 0.0);

  cfg.rounding = RoundingScheme::Independent;
  const RunRecord indep = run_experiment(t, cat, cfg);
  REQUIRE(cumulative_update_cost(indep, indep.num_slots()) > 0.0);

  cfg.rounding = RoundingScheme::None;
  const RunRecord frac = run_experiment(t, cat, cfg);
  for (long long s = 0; s < frac.num_slots(); ++s) {
    const RequestBatch& r = t.batches[static_cast<std::size_t>(s)];
    double expect = 0.0;
    for (const auto& [file, count] : r.counts) expect += count * (1.0 - 0.4);
    REQUIRE_THAT(frac.service_costs[static_cast<std::size_t>(s)],
                 Catch::Matchers::WithinAbs(expect, 1e-12));
    REQUIRE(frac.update_costs[static_cast<std::size_t>(s)] == 0.0);
  }
}

TEST_CASE("gradient policies incur no update cost when played fractionally") {
  const Trace t = small_trace(300, 10, 4, 26);
  const Catalog cat = Catalog::uniform(10);
  for (const char* id : {"ogd", "omd-ne"}) {
    PolicyConfig cfg;
    cfg.id = id;
    cfg.capacity = 3;
    const RunRecord rec = run_experiment(t, cat, cfg);
    for (double uc : rec.update_costs) REQUIRE(uc == 0.0);
  }
}

TEST_CASE("pooling the state over changed files keeps it feasible") {
  GeneratorSpec spec;
  spec.kind = TraceKind::PartialPopularityChange;
  spec.catalog_size = 20;
  spec.num_batches = 200;
  spec.period = 50;
  spec.swap_fraction = 0.1;
  spec.seed = 27;
  const Trace t = generate_trace(spec);
  const Catalog cat = Catalog::uniform(20);

  PolicyConfig cfg;
  cfg.id = "omd-ne";
  cfg.capacity = 5;
  cfg.reset_on_change = true;
  const RunRecord with_reset = run_experiment(t, cat, cfg);
  cfg.reset_on_change = false;
  const RunRecord without = run_experiment(t, cat, cfg);
  REQUIRE(with_reset.service_costs != without.service_costs);

  // Direct check of the pooling rule.
  FractionalState x;
  x.capacity = 2;
  x.x = {0.8, 0.2, 0.5, 0.5};
  const std::vector<double> oldp = {0.4, 0.3, 0.2, 0.1};
  const std::vector<double> newp = {0.2, 0.3, 0.4, 0.1};  // files 0 and 2 changed
  const FractionalState pooled = detail::pooled_reset(x, oldp, newp);
  REQUIRE_THAT(pooled.x[0], Catch::Matchers::WithinAbs(0.65, 1e-15));
  REQUIRE(pooled.x[1] == 0.2);
  REQUIRE_THAT(pooled.x[2], Catch::Matchers::WithinAbs(0.65, 1e-15));
  REQUIRE(pooled.x[3] == 0.5);
  REQUIRE_NOTHROW(pooled.validate());
}

TEST_CASE("stationary traces keep the clairvoyant per-slot policy static") {
  const Trace t = small_trace(80, 9, 2, 28);
  const Catalog cat = Catalog::uniform(9);
  PolicyConfig cfg;
  cfg.id = "best-dynamic";
  cfg.capacity = 3;
  const RunRecord rec = run_experiment(t, cat, cfg);
  for (double uc : rec.update_costs) REQUIRE(uc == 0.0);
}

TEST_CASE("experiments are reproducible from the seed") {
  const Trace t = small_trace(120, 10, 2, 29);
  const Catalog cat = Catalog::uniform(10);
  PolicyConfig cfg;
  cfg.id = "ftpl";
  cfg.capacity = 3;
  cfg.seed = 5;
  const RunRecord a = run_experiment(t, cat, cfg);
  const RunRecord b = run_experiment(t, cat, cfg);
  REQUIRE(a.service_costs == b.service_costs);
  REQUIRE(a.update_costs == b.update_costs);
  cfg.seed = 6;
  REQUIRE(run_experiment(t, cat, cfg).service_costs != a.service_costs);
}

TEST_CASE("csv emission: header, stride, bitwise agreement with point metrics") {
  const Trace t = small_trace(10, 6, 2, 30);
  const Catalog cat = Catalog::uniform(6);
  PolicyConfig cfg;
  cfg.id = "lfu";
  cfg.capacity = 2;
  const RunRecord rec = run_experiment(t, cat, cfg);

  std::ostringstream a, b;
  write_run_csv({rec}, 4, a, 4);
  write_run_csv({rec}, 4, b, 4);
  REQUIRE(a.str() == b.str());

  std::istringstream in(a.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  REQUIRE(line == "slot,policy,metric,value");
  std::vector<long long> slots;
  std::vector<std::string> nac_values;
  while (std::getline(in, line)) {
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = line.find(',', c1 + 1);
    const std::size_t c3 = line.find(',', c2 + 1);
    REQUIRE(c3 != std::string::npos);
    const long long slot = std::stoll(line.substr(0, c1));
    REQUIRE(line.substr(c1 + 1, c2 - c1 - 1) == "lfu");
    if (slots.empty() || slots.back() != slot) slots.push_back(slot);
    if (line.substr(c2 + 1, c3 - c2 - 1) == "nac") nac_values.push_back(line.substr(c3 + 1));
  }
  REQUIRE(slots == std::vector<long long>{4, 8, 10});  // stride 4 plus the final slot

  REQUIRE(nac_values.size() == 3);
  REQUIRE(nac_values[0] == detail::format_double(average_cost(rec, 4)));
  REQUIRE(nac_values[1] == detail::format_double(average_cost(rec, 8)));
  REQUIRE(nac_values[2] == detail::format_double(average_cost(rec, 10)));

  REQUIRE_THROWS_AS(write_run_csv({rec}, 0, a), InvalidInput);
  REQUIRE_THROWS_AS(write_run_csv({rec}, 4, a, 0), InvalidInput);
}

TEST_CASE("alternating-pair stress: the leader-chaser pays nearly every slot") {
  const AdversaryReport rep = run_alternating_pair_adversary(1000);
  REQUIRE(rep.slots == 1000);
  REQUIRE(rep.policy_cost == 1998.0);
  REQUIRE(rep.benchmark_cost == 999.0);
  REQUIRE(rep.regret == 999.0);
  REQUIRE_THROWS_AS(run_alternating_pair_adversary(1), InvalidInput);
}

TEST_CASE("uncached-sweep stress: eviction and counting policies miss forever") {
  const long long t_slots = 2000;
  const double lower = 0.95 * 2.0 * 0.8 * static_cast<double>(t_slots);
  for (const char* id : {"lru", "lfu", "ftl"}) {
    const AdversaryReport rep = run_uncached_sweep_adversary(id, 10, 2, t_slots);
    REQUIRE(rep.regret >= lower);
  }
  REQUIRE_THROWS_AS(run_uncached_sweep_adversary("ogd", 10, 2, 10), InvalidInput);
  REQUIRE_THROWS_AS(run_uncached_sweep_adversary("lru", 10, 10, 10), InvalidInput);
}

TEST_CASE("rounding stress: fresh thresholds churn, one shared threshold does not") {
  const RoundingAdversaryReport rep = run_fractional_rounding_adversary(2, 1, 500, 10);
  REQUIRE(rep.mean_coupled_update_cost == 0.0);
  REQUIRE(rep.mean_independent_update_cost >= 50.0);   // expectation is ~125
  REQUIRE(rep.mean_regret >= 150.0);                   // expectation is ~375
  REQUIRE_THROWS_AS(run_fractional_rounding_adversary(2, 2, 10, 1), InvalidInput);
}

TEST_CASE("trace constants feed the learning-rate inputs") {
  const Trace t = small_trace(40, 7, 3, 31);
  Catalog cat = Catalog::uniform(7);
  cat.service_cost_w[2] = 4.0;
  const BoundInputs in = bound_inputs_for(t, cat, 2);
  REQUIRE(in.catalog_size == 7);
  REQUIRE(in.capacity == 2);
  REQUIRE(in.batch_size == 3);
  REQUIRE(in.max_multiplicity == t.max_multiplicity);
  REQUIRE(in.horizon == 40);
  REQUIRE(in.w_max == 4.0);
}
