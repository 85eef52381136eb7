// Command-line front end: trace generation and ingestion, policy runs with
// per-slot metrics, bound/exponent tables, rounding-scheme comparisons, and
// closed-loop stress tests.
//
// Exit codes: 0 success, 1 invalid input (including bad arguments),
// 2 numeric failure.

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "omdcache/baselines.hpp"
#include "omdcache/bounds.hpp"
#include "omdcache/harness.hpp"
#include "omdcache/metrics.hpp"
#include "omdcache/policies.hpp"
#include "omdcache/rounding.hpp"
#include "omdcache/trace_gen.hpp"
#include "omdcache/trace_io.hpp"

namespace {

using namespace omdcache;

void with_output(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot open output file: " + path);
  fn(f);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot open input file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) lines.push_back(line);
  return lines;
}

std::vector<double> read_weights(const std::string& path, int n) {
  std::vector<double> w;
  for (const std::string& line : read_lines(path)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    w.push_back(detail::parse_double(line, "weight"));
  }
  if (static_cast<int>(w.size()) != n) {
    throw InvalidInput("weights file " + path + " must hold exactly " + std::to_string(n) +
                       " values, got " + std::to_string(w.size()));
  }
  return w;
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenOptions {
  std::string kind = "batched-zipf";
  int n = 0;
  double alpha = 0.8;
  int r = 1;
  long long b = 0;
  long long t = 0;
  std::uint64_t seed = 1;
  long long period = 0;
  long long step = 0;
  double swap_frac = 0.05;
  std::string from_log;
  int top_m = 0;
  std::string out = "-";
};

TraceKind parse_kind(const std::string& s) {
  if (s == "fixed-zipf") return TraceKind::FixedZipf;
  if (s == "batched-zipf") return TraceKind::BatchedZipf;
  if (s == "partial-change") return TraceKind::PartialPopularityChange;
  if (s == "global-change") return TraceKind::GlobalPopularityChange;
  throw InvalidInput("unknown trace kind: " + s);
}

void cmd_gen(const GenOptions& o) {
  Trace trace;
  if (!o.from_log.empty()) {
    if (o.top_m < 1) throw InvalidInput("--from-log requires --top-m >= 1");
    IngestResult res = ingest_raw_log(read_lines(o.from_log), o.r, o.top_m, o.t);
    std::cerr << "ingested " << res.trace.num_slots() << " slots over "
              << res.trace.catalog_size << " files (skipped " << res.skipped_lines
              << " lines, dropped " << res.dropped_requests << " requests)\n";
    trace = std::move(res.trace);
  } else {
    GeneratorSpec spec;
    spec.kind = parse_kind(o.kind);
    spec.catalog_size = o.n;
    spec.zipf_alpha = o.alpha;
    spec.batch_size = o.r;
    spec.num_batches = o.b;
    spec.horizon = o.t;
    spec.seed = o.seed;
    spec.period = o.period;
    spec.shift_step = o.step;
    spec.swap_fraction = o.swap_frac;
    trace = generate_trace(spec);
  }
  with_output(o.out, [&](std::ostream& os) { write_trace(trace, os); });
}

// ---------------------------------------------------------------------------
// run / compare
// ---------------------------------------------------------------------------

struct RunOptions {
  std::string trace;
  std::vector<std::string> policies{"ogd"};
  int k = 1;
  std::string schedule = "theory";
  double eta = 0.0;
  double eta0 = 0.0;
  double q = 1.5;
  double delta = 1e-4;
  double perturbation = 1.0;
  long long window = 0;
  std::string rounding = "none";
  std::string comparator = "full-trace";
  bool reset = false;
  bool shuffle = false;
  std::uint64_t seed = 1;
  long long tau = 500;
  long long stride = 1;
  std::string service_weights;
  std::string update_weights;
  std::string out = "-";
};

RoundingScheme parse_rounding(const std::string& s) {
  if (s == "none") return RoundingScheme::None;
  if (s == "independent") return RoundingScheme::Independent;
  if (s == "coupled") return RoundingScheme::Coupled;
  if (s == "optimal") return RoundingScheme::Optimal;
  throw InvalidInput("unknown rounding scheme: " + s);
}

ComparatorMode parse_comparator(const std::string& s) {
  if (s == "full-trace") return ComparatorMode::FullTrace;
  if (s == "prefix") return ComparatorMode::Prefix;
  throw InvalidInput("unknown comparator mode: " + s);
}

LearningSchedule parse_schedule(const RunOptions& o) {
  if (o.schedule == "theory") return LearningSchedule::theory();
  if (o.schedule == "fixed") {
    if (!(o.eta > 0.0)) throw InvalidInput("--schedule fixed requires --eta > 0");
    return LearningSchedule::fixed(o.eta);
  }
  if (o.schedule == "diminishing") return LearningSchedule::diminishing(o.eta0);
  throw InvalidInput("unknown schedule: " + o.schedule);
}

Catalog catalog_for(const RunOptions& o, const Trace& trace) {
  Catalog cat = Catalog::uniform(trace.catalog_size);
  if (!o.service_weights.empty()) {
    cat.service_cost_w = read_weights(o.service_weights, trace.catalog_size);
  }
  if (!o.update_weights.empty()) {
    cat.update_cost_w = read_weights(o.update_weights, trace.catalog_size);
  }
  cat.validate();
  return cat;
}

PolicyConfig policy_config_for(const RunOptions& o, const std::string& id) {
  PolicyConfig cfg;
  cfg.id = id;
  cfg.capacity = o.k;
  cfg.schedule = parse_schedule(o);
  cfg.q = o.q;
  cfg.delta = o.delta;
  cfg.perturbation = o.perturbation;
  cfg.window = o.window;
  cfg.rounding = parse_rounding(o.rounding);
  cfg.comparator = parse_comparator(o.comparator);
  cfg.reset_on_change = o.reset;
  cfg.shuffle_requests = o.shuffle;
  cfg.seed = o.seed;
  return cfg;
}

void cmd_run(const RunOptions& o) {
  const Trace trace = read_trace_file(o.trace);
  const Catalog cat = catalog_for(o, trace);
  std::vector<RunRecord> records;
  for (const std::string& id : o.policies) {
    records.push_back(run_experiment(trace, cat, policy_config_for(o, id)));
  }
  if (records.empty()) throw InvalidInput("no policies given");
  with_output(o.out, [&](std::ostream& os) { write_run_csv(records, o.tau, os, o.stride); });
}

// ---------------------------------------------------------------------------
// qstar
// ---------------------------------------------------------------------------

struct QstarOptions {
  int n = 0;
  int k = 1;
  int h = 1;
  long long t = 10000;
  double w = 1.0;
  std::vector<int> r_values;  // batch sizes to tabulate; empty doubles from h
  std::string out = "-";
};

void cmd_qstar(const QstarOptions& o) {
  std::vector<int> rs = o.r_values;
  if (rs.empty()) {
    for (long long r = o.h; r <= static_cast<long long>(o.h) * o.n; r *= 2) {
      rs.push_back(static_cast<int>(r));
    }
  }
  with_output(o.out, [&](std::ostream& os) {
    os << "r,ratio,q_star,regret_bound,regime\n";
    for (int r : rs) {
      BoundInputs in;
      in.catalog_size = o.n;
      in.capacity = o.k;
      in.batch_size = r;
      in.max_multiplicity = o.h;
      in.horizon = o.t;
      in.w_max = o.w;
      const double q = q_star(in);
      const double bound = q > 1.0 ? regret_upper_bound(q, in) : regret_upper_bound_limit(in);
      os << r << ',' << detail::format_double(static_cast<double>(r) / o.h) << ','
         << detail::format_double(q) << ',' << detail::format_double(bound) << ','
         << to_string(regime(in)) << '\n';
    }
  });
}

// ---------------------------------------------------------------------------
// round: realized cost of each rounding scheme on one trace, next to the
// closed-form expectations for the shared-threshold and cheapest couplings.
// ---------------------------------------------------------------------------

void cmd_round(const RunOptions& o) {
  const Trace trace = read_trace_file(o.trace);
  const Catalog cat = catalog_for(o, trace);
  if (o.policies.size() != 1) throw InvalidInput("round expects exactly one policy");
  const std::string& id = o.policies.front();
  if (!is_gradient_policy(id) && id != "constant-uniform") {
    throw InvalidInput("round expects a fractional policy");
  }

  std::vector<std::pair<std::string, double>> rows;
  const long long b = trace.num_slots();
  for (const char* scheme : {"none", "independent", "coupled", "optimal"}) {
    RunOptions local = o;
    local.rounding = scheme;
    RunRecord rec = run_experiment(trace, cat, policy_config_for(local, id));
    rows.emplace_back(std::string(scheme) + ",nac", average_cost(rec, b));
    rows.emplace_back(std::string(scheme) + ",cuc", cumulative_update_cost(rec, b));
  }

  // Expected update cost along the fractional chain, computed exactly.
  {
    RunOptions local = o;
    local.rounding = "none";
    PolicyConfig cfg = policy_config_for(local, id);
    const MirrorMap map =
        id == "constant-uniform" ? MirrorMap::euclidean() : mirror_map_for(cfg);
    const BoundInputs bin = bound_inputs_for(trace, cat, cfg.capacity);
    GradientPolicy pol(map, cat, cfg.capacity);
    pol.reset(initial_state(trace.catalog_size, cfg.capacity));
    KahanAccumulator coupled_expect, optimal_expect;
    FractionalState x_prev = pol.state();
    RoundedSupport sup_prev = decompose(x_prev);
    for (long long s = 0; s < b; ++s) {
      const RequestBatch& r = trace.batches[static_cast<std::size_t>(s)];
      if (id != "constant-uniform") {
        pol.step(r, schedule_rate(cfg.schedule, map, bin, s + 1));
      }
      const FractionalState x_next = pol.state();
      coupled_expect.add(expected_coupled_cost(x_prev, x_next, r, cat));
      RoundedSupport sup_next = decompose(x_next);
      optimal_expect.add(
          optimal_coupling(sup_prev, sup_next, r, cat, trace.catalog_size).expected_cost);
      x_prev = x_next;
      sup_prev = std::move(sup_next);
    }
    rows.emplace_back("coupled-expected,cuc", coupled_expect.value());
    rows.emplace_back("optimal-expected,cuc", optimal_expect.value());
  }

  with_output(o.out, [&](std::ostream& os) {
    os << "slot,policy,metric,value\n";
    for (const auto& [key, value] : rows) {
      const std::size_t comma = key.find(',');
      os << b << ',' << id << '+' << key.substr(0, comma) << ',' << key.substr(comma + 1)
         << ',' << detail::format_double(value) << '\n';
    }
  });
}

// ---------------------------------------------------------------------------
// adversary
// ---------------------------------------------------------------------------

struct AdversaryOptions {
  std::string kind;
  std::string policy = "lru";
  int n = 10;
  int k = 2;
  long long t = 1000;
  int seeds = 10;
  std::uint64_t seed = 1;
  double perturbation = 1.0;
  std::string out = "-";
};

void cmd_adversary(const AdversaryOptions& o) {
  std::vector<std::pair<std::string, double>> rows;
  if (o.kind == "alternating-pair") {
    const AdversaryReport rep = run_alternating_pair_adversary(o.t);
    rows = {{"slots", static_cast<double>(rep.slots)},
            {"policy_cost", rep.policy_cost},
            {"benchmark_cost", rep.benchmark_cost},
            {"regret", rep.regret}};
  } else if (o.kind == "uncached-sweep") {
    const AdversaryReport rep =
        run_uncached_sweep_adversary(o.policy, o.n, o.k, o.t, o.seed, o.perturbation);
    rows = {{"slots", static_cast<double>(rep.slots)},
            {"policy_cost", rep.policy_cost},
            {"benchmark_cost", rep.benchmark_cost},
            {"regret", rep.regret}};
  } else if (o.kind == "rounding") {
    const RoundingAdversaryReport rep =
        run_fractional_rounding_adversary(o.n, o.k, o.t, o.seeds, o.seed);
    rows = {{"slots", static_cast<double>(rep.slots)},
            {"seeds", static_cast<double>(rep.seeds)},
            {"mean_regret", rep.mean_regret},
            {"mean_independent_update_cost", rep.mean_independent_update_cost},
            {"mean_coupled_update_cost", rep.mean_coupled_update_cost}};
  } else {
    throw InvalidInput("unknown adversary kind: " + o.kind);
  }
  with_output(o.out, [&](std::ostream& os) {
    os << "key,value\n";
    for (const auto& [key, value] : rows) {
      os << key << ',' << detail::format_double(value) << '\n';
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"no-regret online caching: mirror-descent policies, rounding, baselines"};
  app.set_config("--config", "",
                 "read options from a key=value file ([subcommand] sections)");
  app.require_subcommand(1);

  GenOptions gen;
  CLI::App* g = app.add_subcommand("gen", "generate or ingest a request trace");
  g->add_option("--kind", gen.kind,
                "fixed-zipf | batched-zipf | partial-change | global-change");
  g->add_option("--n", gen.n, "catalog size");
  g->add_option("--alpha", gen.alpha, "popularity skew exponent");
  g->add_option("--r", gen.r, "requests per slot");
  g->add_option("--b", gen.b, "number of slots");
  g->add_option("--t", gen.t, "tuning horizon recorded in the trace (0 derives it)");
  g->add_option("--seed", gen.seed, "random seed");
  g->add_option("--period", gen.period, "slots between popularity changes");
  g->add_option("--step", gen.step, "circular shift amount (global-change)");
  g->add_option("--swap-frac", gen.swap_frac, "share of files swapped (partial-change)");
  g->add_option("--from-log", gen.from_log, "ingest a raw log (one request id per line)");
  g->add_option("--top-m", gen.top_m, "keep only the m most frequent ids when ingesting");
  g->add_option("--out", gen.out, "output file ('-' for stdout)");
  g->callback([&] { cmd_gen(gen); });

  RunOptions run;
  auto add_run_options = [&](CLI::App* c, bool multi) {
    c->add_option("--trace", run.trace, "trace file")->required();
    c->add_option(multi ? "--policies" : "--policy", run.policies,
                  "ogd | omd-q | omd-ne | omd-ne-delta | ftl | ftpl | lru | lfu | wlfu | "
                  "best-static | best-dynamic | constant-uniform")
        ->delimiter(',')
        ->expected(multi ? -1 : 1);
    c->add_option("--k", run.k, "cache capacity")->required();
    c->add_option("--schedule", run.schedule, "theory | fixed | diminishing");
    c->add_option("--eta", run.eta, "learning rate (fixed schedule)");
    c->add_option("--eta0", run.eta0, "initial rate (diminishing schedule; 0 derives it)");
    c->add_option("--q", run.q, "norm exponent for omd-q, in (1,2)");
    c->add_option("--delta", run.delta, "interior margin for omd-ne-delta");
    c->add_option("--perturbation", run.perturbation, "noise scale for ftpl");
    c->add_option("--window", run.window, "request window for wlfu (0 = horizon * r)");
    c->add_option("--rounding", run.rounding, "none | independent | coupled | optimal");
    c->add_option("--comparator", run.comparator, "full-trace | prefix");
    c->add_flag("--reset", run.reset, "re-pool state over changed files at popularity changes");
    c->add_flag("--shuffle", run.shuffle, "shuffle request order inside each slot (caches)");
    c->add_option("--seed", run.seed, "random seed");
    c->add_option("--tau", run.tau, "sliding window for the moving-average metric");
    c->add_option("--stride", run.stride, "emit every stride-th slot");
    c->add_option("--service-weights", run.service_weights, "per-file service costs (one per line)");
    c->add_option("--update-weights", run.update_weights, "per-file update costs (one per line)");
    c->add_option("--out", run.out, "output file ('-' for stdout)");
  };
  CLI::App* r = app.add_subcommand("run", "run one policy over a trace, emit per-slot metrics");
  add_run_options(r, false);
  r->callback([&] { cmd_run(run); });
  CLI::App* c = app.add_subcommand("compare", "run several policies over one trace");
  add_run_options(c, true);
  c->callback([&] { cmd_run(run); });

  QstarOptions qs;
  CLI::App* q = app.add_subcommand("qstar", "best norm exponent and regret bound per batch size");
  q->add_option("--n", qs.n, "catalog size")->required();
  q->add_option("--k", qs.k, "cache capacity")->required();
  q->add_option("--hmax", qs.h, "max request multiplicity");
  q->add_option("--t", qs.t, "horizon");
  q->add_option("--w", qs.w, "largest service cost");
  q->add_option("--r-values", qs.r_values, "comma-separated batch sizes (default: doubling)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  q->add_option("--out", qs.out, "output file ('-' for stdout)");
  q->callback([&] { cmd_qstar(qs); });

  CLI::App* rd = app.add_subcommand(
      "round", "compare rounding schemes for one fractional policy on a trace");
  add_run_options(rd, false);
  rd->callback([&] { cmd_round(run); });

  AdversaryOptions adv;
  CLI::App* a = app.add_subcommand("adversary", "closed-loop stress tests");
  a->add_option("--kind", adv.kind, "alternating-pair | uncached-sweep | rounding")->required();
  a->add_option("--policy", adv.policy, "target policy (uncached-sweep)");
  a->add_option("--n", adv.n, "catalog size");
  a->add_option("--k", adv.k, "cache capacity");
  a->add_option("--t", adv.t, "slots");
  a->add_option("--seeds", adv.seeds, "seed count (rounding)");
  a->add_option("--seed", adv.seed, "base seed");
  a->add_option("--perturbation", adv.perturbation, "noise scale (ftpl target)");
  a->add_option("--out", adv.out, "output file ('-' for stdout)");
  a->callback([&] { cmd_adversary(adv); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const omdcache::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const omdcache::NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
