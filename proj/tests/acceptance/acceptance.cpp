// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "blueprintd/comparator.hpp"
#include "blueprintd/errors.hpp"
#include "blueprintd/fitting.hpp"
#include "blueprintd/harness.hpp"
#include "blueprintd/predictor.hpp"
#include "blueprintd/scoring.hpp"
#include "blueprintd/simulator.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using namespace blueprintd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Context {
  fs::path cli;
  fs::path scenarios;
  fs::path work;
};

bool close_rel(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::max(std::abs(want), 1e-300);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Independent evaluations of the closed forms, written from their
// definitions rather than through the library.
double ref_wait(double rho, double k, double q) { return rho <= 1 - q ? 0.0 : -k / (1 - rho) * std::log((1 - q) / rho); }
double ref_provisioning(double g, double c1, double c2, double b, double d) { return (c1 * b / d + c2) * g; }
double ref_txn(double rho, double a, double b, double m) { return a / (m - rho) + b; }

Outcome closed_form_models() {
  constexpr double tol = 1e-9;
  Outcome o;
  int checks = 0;
  auto expect = [&](const char* what, double got, double want) {
    ++checks;
    if (!close_rel(got, want, tol)) {
      o.pass = false;
      o.detail += std::string(what) + " got " + fmt(got) + " want " + fmt(want) + "; ";
    }
  };
  expect("wait(0.9,1,0.9)", queueing_delay(0.9, 1.0, 0.9), 21.972245773362196);
  expect("wait(0.5,2,0.9)", queueing_delay(0.5, 2.0, 0.9), 6.437751649736401);
  expect("wait(0.1,1,0.9)", queueing_delay(0.1, 1.0, 0.9) + 1.0, 1.0);
  expect("P(10;0.9,0.1,4,8)", adjust_for_provisioning(10, {0.9, 0.1, 4, 0}, 8), 5.5);
  expect("R(0.5;1,0.005,1)", txn_latency(0.5, {1.0, 0.005, 1.0, 0}), 2.005);
  SloConfig slo;
  slo.txn_p90_s = 0.03;
  slo.query_p90_s = 30.0;
  expect("penalty idle", penalty({0, 0, 0, {}}, slo), 1.0);
  expect("penalty t=slo", penalty({0.03, 0, 0, {}}, slo), 2.0);
  expect("penalty 0.5/1.5", penalty({0.015, 45.0, 0, {}}, slo), 2.5);
  VectorScore s;
  s.query_latencies = {1.0};
  s.query_weights = {1.0};
  s.txn_latency = 0.01;
  s.operating_cost = 1.0;
  expect("W unit", scalarize(s, {0, 0, 0, {}}, slo), 1.0);
  slo.benefit_period_hours = 10.0;
  s.transition_time_s = 1800.0;
  expect("W example", scalarize(s, {0.03, 0, 2.0, {}}, slo), 14.0);
  s.query_latencies = {31.0};
  ++checks;
  if (!std::isinf(scalarize(s, {}, slo))) {
    o.pass = false;
    o.detail += "infeasible candidate not infinite; ";
  }

  // Grid against the reference forms.
  for (double rho = 0.0; rho < 0.98; rho += 0.01) {
    for (double k : {0.1, 1.0, 7.5}) {
      for (double q : {0.5, 0.9, 0.99}) expect("wait grid", queueing_delay(rho, k, q) + k, ref_wait(rho, k, q) + k);
    }
    expect("txn grid", txn_latency(rho, {0.3, 0.01, 1.2, 0}), ref_txn(rho, 0.3, 0.01, 1.2));
  }
  for (int d = 1; d <= 64; ++d) {
    expect("provisioning grid", adjust_for_provisioning(3.3, {0.7, 0.4, 8, 0}, d), ref_provisioning(3.3, 0.7, 0.4, 8, d));
  }
  if (o.pass) o.detail = std::to_string(checks) + " checks within 1e-9 relative";
  return o;
}

Outcome fit_recovery() {
  Outcome o;
  std::vector<ProvisioningObservation> pobs;
  for (double g : {0.5, 2.0, 9.0}) {
    for (int d : {1, 2, 4, 8, 16}) pobs.push_back({g, d, ref_provisioning(g, 0.9, 0.1, 4, d)});
  }
  const auto p = fit_provisioning_constants(pobs, 4);
  const double p_err = std::max(std::abs(p.c1 - 0.9) / 0.9, std::abs(p.c2 - 0.1) / 0.1);

  std::vector<TxnObservation> tobs;
  for (int i = 1; i <= 9; ++i) tobs.push_back({i / 10.0, ref_txn(i / 10.0, 1.0, 0.005, 1.0)});
  const auto t = fit_txn_model(tobs);
  const double t_err = std::max({std::abs(t.a - 1.0), std::abs(t.b - 0.005) / 0.005, std::abs(t.M - 1.0)});

  o.pass = p_err < 1e-9 && t_err < 1e-2;
  o.detail = "provisioning rel err " + fmt(p_err) + " (<1e-9), txn rel err " + fmt(t_err) + " (<1e-2)";
  return o;
}

struct SearchStats {
  std::size_t instances = 0;
  std::size_t exact = 0;
  std::size_t within_5pct = 0;
  std::size_t greedy_dominated = 0;
  std::size_t random_dominated = 0;
  double worst_gap = 0.0;
  std::string failures;
};

SearchStats& search_stats() {
  static SearchStats stats = [] {
    SearchStats s;
    for (std::uint64_t seed = 1; seed <= 24; ++seed) {
      const std::size_t n = 8 + seed % 5;
      const auto inst = generate_search_instance(seed, n);
      const auto r = compare_search(inst, 100, 10000, seed);
      ++s.instances;
      const bool exact = r.beam_w == r.exhaustive_w;
      const double gap = std::isfinite(r.exhaustive_w) ? (r.beam_w - r.exhaustive_w) / r.exhaustive_w
                         : (exact ? 0.0 : INFINITY);
      s.exact += exact;
      s.within_5pct += exact || gap <= 0.05;
      s.worst_gap = std::max(s.worst_gap, gap);
      s.greedy_dominated += r.beam_w <= r.greedy_w;
      s.random_dominated += r.beam_w <= r.random_w;
      if (!(r.beam_w <= r.greedy_w) || !(r.beam_w <= r.random_w)) {
        s.failures += "seed " + std::to_string(seed) + " beam " + fmt(r.beam_w) + " greedy " + fmt(r.greedy_w) +
                      " random " + fmt(r.random_w) + "; ";
      }
    }
    return s;
  }();
  return stats;
}

Outcome beam_vs_exhaustive() {
  const auto& s = search_stats();
  Outcome o;
  o.pass = s.instances >= 20 && s.exact * 100 >= 95 * s.instances && s.within_5pct == s.instances;
  o.detail = std::to_string(s.exact) + "/" + std::to_string(s.instances) + " exact, worst gap " + fmt(s.worst_gap);
  return o;
}

Outcome baseline_dominance() {
  const auto& s = search_stats();
  Outcome o;
  o.pass = s.greedy_dominated == s.instances && s.random_dominated == s.instances;
  o.detail = "beam <= greedy on " + std::to_string(s.greedy_dominated) + "/" + std::to_string(s.instances) +
             ", beam <= random on " + std::to_string(s.random_dominated) + "/" + std::to_string(s.instances);
  if (!s.failures.empty()) o.detail += "; " + s.failures;
  return o;
}

Outcome scale_down(const Context& ctx) {
  const auto sc = ScenarioConfig::load(ctx.scenarios / "scale_down.json");
  const auto r = run_scenario(sc);
  bool paused = false;
  std::optional<double> first;
  for (const auto& e : r.log.events) {
    if (e.kind != "transition_complete") continue;
    if (!first) first = e.t;
    paused = paused || !Blueprint::from_json(e.detail["blueprint"], &sc.pricing).serving(EngineId::Warehouse);
  }
  std::size_t post = 0, ok = 0;
  for (const auto& rec : r.log.records) {
    if (!first || rec.t - rec.span_s < *first) continue;
    ++post;
    ok += slo_compliant(rec, sc.slo);
  }
  const double initial = r.log.summary["cost_initial"].get<double>();
  const double final_cost = r.log.summary["cost_final"].get<double>();
  const double compliance = post ? static_cast<double>(ok) / static_cast<double>(post) : 0.0;
  Outcome o;
  o.pass = paused && final_cost <= 0.5 * initial && post > 0 && compliance >= 0.95;
  o.detail = std::string("warehouse paused ") + (paused ? "yes" : "no") + ", cost " + fmt(initial) + " -> " +
             fmt(final_cost) + " (ratio " + fmt(final_cost / initial) + "), post-transition compliance " +
             fmt(compliance) + " over " + std::to_string(post) + " windows";
  return o;
}

Outcome txn_scale_up(const Context& ctx) {
  const auto sc = ScenarioConfig::load(ctx.scenarios / "txn_scale_up.json");
  const auto r = run_scenario(sc);
  double step_at = 0.0;
  for (std::size_t i = 1; i < sc.phases.size(); ++i) {
    if (sc.phases[i].txn_clients > sc.phases[i - 1].txn_clients) {
      step_at = sc.phases[i].start_s;
      break;
    }
  }
  const int before = sc.initial.provisioning(EngineId::RowStore)->total_vcpus();
  std::optional<double> activated;
  double transition_s = 0.0;
  double pending_tt = 0.0;
  for (const auto& e : r.log.events) {
    if (e.kind == "plan_selected") pending_tt = e.detail["transition_time_s"].get<double>();
    if (e.kind != "transition_complete" || e.t < step_at || activated) continue;
    const auto bp = Blueprint::from_json(e.detail["blueprint"], &sc.pricing);
    if (bp.provisioning(EngineId::RowStore)->total_vcpus() > before) {
      activated = e.t;
      transition_s = pending_tt;
    }
  }
  // Recovery: start of the first run of compliant txn p90 records lasting
  // until the end of the run, at or after the step.
  std::optional<double> recovered;
  for (const auto& rec : r.log.records) {
    if (rec.t - rec.span_s < step_at) continue;
    if (rec.txn_p90_s <= sc.slo.txn_p90_s) {
      if (!recovered) recovered = rec.t - rec.span_s;
    } else {
      recovered.reset();
    }
  }
  const double budget = sc.planning.window_s + transition_s;
  Outcome o;
  o.pass = activated.has_value() && recovered.has_value() && *recovered - step_at <= budget;
  o.detail = "step at " + fmt(step_at) + " s, RowStore scaled up at " + (activated ? fmt(*activated) : "never") +
             " s, txn p90 back under SLO " + (recovered ? fmt(*recovered - step_at) : "never") + " s after the step (budget " +
             fmt(budget) + " s)";
  return o;
}

Outcome sensitivity(const Context& ctx) {
  const auto sc = ScenarioConfig::load(ctx.scenarios / "scale_down.json");
  const std::vector<double> fractions{0.1, 0.2, 0.4, 0.8};
  std::vector<double> errors;
  for (int i = -4; i <= 4; ++i) errors.push_back(i / 5.0);
  const auto a = run_sensitivity(sc, fractions, errors, 5);
  const auto b = run_sensitivity(sc, fractions, errors, 5);
  const bool deterministic = a.to_json().dump() == b.to_json().dump();
  std::size_t guarded = 0, stable = 0, zero_row = 0, zero_stable = 0, changed = 0;
  for (const auto& c : a.cells) {
    changed += !c.unchanged;
    if (c.error == 0.0) {
      ++zero_row;
      zero_stable += c.unchanged;
    }
    if (c.fraction <= 0.4 + 1e-12 && std::abs(c.error) <= 0.4 + 1e-12) {
      ++guarded;
      stable += c.unchanged;
    }
  }
  Outcome o;
  o.pass = deterministic && guarded > 0 && stable == guarded && zero_stable == zero_row &&
           a.cells.size() == fractions.size() * errors.size() * 5;
  o.detail = std::to_string(stable) + "/" + std::to_string(guarded) + " guarded cells unchanged, " +
             std::to_string(changed) + "/" + std::to_string(a.cells.size()) + " cells changed overall, report " +
             (deterministic ? "deterministic" : "NOT deterministic");
  return o;
}

Outcome router() {
  const auto r = evaluate_router(1000, 1, GroundTruthParams{});
  Outcome o;
  o.pass = r.forest_slowdown <= 1.5 && r.forest_slowdown < r.random_slowdown &&
           r.forest_slowdown < r.best_single_slowdown && r.max_nodes_visited <= r.node_budget;
  o.detail = "forest " + fmt(r.forest_slowdown) + ", random " + fmt(r.random_slowdown) + ", best single (" +
             std::string(to_string(r.best_single_engine)) + ") " + fmt(r.best_single_slowdown) + ", nodes " +
             std::to_string(r.max_nodes_visited) + "/" + std::to_string(r.node_budget);
  return o;
}

Outcome oracle_consistency(const Context& ctx) {
  std::size_t pairs = 0, exact = 0;
  auto check = [&](const DatasetCatalog& cat, const GroundTruthParams& params, const PlanningConfig& planning,
                   const std::vector<WorkloadQuery>& queries) {
    auto truth = std::make_shared<EngineGroundTruth>(cat, params);
    const auto oracle = make_predictor(planning, truth);
    for (const auto& q : queries) {
      for (auto e : kAllEngines) {
        ++pairs;
        const double predicted = oracle->predict_runtime(q, e);
        const int base = params.provisioning[engine_index(e)].base_vcpus;
        exact += q_error(predicted, truth->runtime_s(q.query, e)) == 1.0 &&
                 predicted == truth->runtime_on(q.query, e, base);
      }
      ++pairs;
      exact += oracle->predict_bytes_scanned(q) == truth->bytes_scanned(q.query);
    }
  };
  for (const char* name : {"scale_down.json", "txn_scale_up.json", "flat.json"}) {
    const auto sc = ScenarioConfig::load(ctx.scenarios / name);
    std::vector<WorkloadQuery> all;
    for (const auto& p : sc.phases) all.insert(all.end(), p.queries.begin(), p.queries.end());
    check(sc.catalog, sc.truth, sc.planning, all);
  }
  check(router_catalog(), GroundTruthParams{}, PlanningConfig{}, generate_router_workload(1000, 1));
  Outcome o;
  o.pass = pairs > 0 && exact == pairs;
  o.detail = std::to_string(exact) + "/" + std::to_string(pairs) + " predictions exact";
  return o;
}

Outcome cli_determinism(const Context& ctx) {
  const auto cli = ctx.cli.string();
  const auto sc = (ctx.scenarios / "scale_down.json").string();
  fs::remove_all(ctx.work);
  {
    fs::create_directories(ctx.work);
    std::ofstream csv(ctx.work / "obs.csv");
    csv << "base_runtime_s,dest_vcpus,runtime_s\n";
    for (int d : {1, 2, 4, 8}) csv << 3 << "," << d << "," << ref_provisioning(3, 0.8, 0.2, 4, d) * 1.01 << "\n";
  }
  struct Command {
    std::string name;
    std::function<std::string(const fs::path&)> args;
    bool dir_output;
  };
  const std::vector<Command> commands{
      {"simulate", [&](const fs::path& o) { return "simulate --scenario " + sc + " --out " + o.string() + " --seed 4"; }, true},
      {"plan", [&](const fs::path& o) { return "plan --scenario " + sc + " --out " + o.string() + " --seed 4"; }, true},
      {"fit", [&](const fs::path& o) {
         return "fit --observations " + (ctx.work / "obs.csv").string() + " --kind provisioning --base-vcpus 4 --out " +
                (o / "fit.json").string();
       }, false},
      {"route-eval", [&](const fs::path& o) { return "route-eval --queries 1000 --seed 4 --out " + (o / "r.json").string(); }, false},
      {"sensitivity", [&](const fs::path& o) {
         return "sensitivity --scenario " + sc + " --seeds 5 --seed 4 --out " + (o / "s.json").string();
       }, false},
      {"search-compare", [&](const fs::path& o) {
         return "search-compare --workload " + (ctx.scenarios / "search_workload.jsonl").string() +
                " --max-queries 12 --scenario " + sc + " --seed 4 --out " + (o / "c.json").string();
       }, false},
  };
  Outcome o;
  std::size_t identical = 0;
  for (const auto& c : commands) {
    std::vector<fs::path> dirs{ctx.work / (c.name + "_a"), ctx.work / (c.name + "_b")};
    bool ok = true;
    for (const auto& d : dirs) {
      fs::create_directories(d);
      const int code = shell(cli + " " + c.args(d));
      ok = ok && code == 0;
    }
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      ++files;
      ok = ok && slurp(entry.path()) == slurp(dirs[1] / entry.path().filename());
    }
    ok = ok && files > 0;
    identical += ok;
    if (!ok) o.detail += c.name + " differs or failed; ";
  }
  o.pass = identical == commands.size();
  o.detail = std::to_string(identical) + "/" + std::to_string(commands.size()) + " commands byte-identical" +
             (o.detail.empty() ? "" : ": " + o.detail);
  return o;
}

Outcome transition_arithmetic() {
  constexpr double tol = 1e-9;
  const auto pricing = reference_pricing();
  Outcome o;
  int checks = 0;
  auto expect = [&](const char* what, double got, double want) {
    ++checks;
    if (!close_rel(got, want, tol) && !(got == 0.0 && want == 0.0)) {
      o.pass = false;
      o.detail += std::string(what) + " got " + fmt(got) + " want " + fmt(want) + "; ";
    }
  };
  const auto wh = EngineId::Warehouse;
  const auto row = EngineId::RowStore;
  auto change = [&](EngineId e, Provisioning from, Provisioning to) {
    TransitionPlan p;
    p.provisioning_changes.push_back(*classify_change(e, from, to));
    return p;
  };
  const Provisioning wh2{wh, "dc2.large", 2, 2}, wh4{wh, "dc2.large", 4, 2}, wh_big{wh, "ra3.xlplus", 2, 4},
      wh_off{wh, "dc2.large", 0, 2};
  const Provisioning rs1{row, "rs.large", 1, 2}, rs2{row, "rs.large", 2, 2}, rs_big{row, "rs.xlarge", 1, 4};
  expect("classic 18000 MB", transition_time_cost(change(wh, wh2, wh_big), pricing, 18000 * kBytesPerMB).time_s, 1000.0);
  expect("elastic", transition_time_cost(change(wh, wh2, wh4), pricing, 0).time_s, 900.0);
  expect("instance change", transition_time_cost(change(row, rs1, rs_big), pricing, 0).time_s, 300.0);
  expect("pause", transition_time_cost(change(wh, wh2, wh_off), pricing, 1e12).time_s, 0.0);
  expect("replica remove", transition_time_cost(change(row, rs2, rs1), pricing, 0).time_s, 0.0);

  auto fast = pricing;
  fast.export_rate_bps.fill(100 * kBytesPerMB);
  fast.import_rate_bps.fill(100 * kBytesPerMB);
  TransitionPlan move;
  move.table_moves.push_back({"t", row, EngineId::ScanService, kBytesPerGB});
  expect("1 GB at 100 MB/s each way", transition_time_cost(move, fast, 0).time_s, 20.48);
  move.table_moves[0].dest = wh;
  expect("1 GB RowStore->Warehouse", transition_time_cost(move, pricing, 0).time_s, 1024.0 / 40 + 1024.0 / 100);
  expect("transfer cost", transition_time_cost(move, pricing, 0).cost, 10.0 / 1024.0);
  move.provisioning_changes.push_back(*classify_change(wh, wh2, wh4));
  expect("move + elastic, same engine", transition_time_cost(move, pricing, 0).time_s, 900.0 + 1024.0 / 40 + 1024.0 / 100);
  if (o.pass) o.detail = std::to_string(checks) + " estimates within 1e-9 relative; 18000 MB classic resize = 1000 s";
  return o;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  Context ctx;
  std::string only;
  app.add_option("--cli", ctx.cli, "Path to the blueprintd binary")->required();
  app.add_option("--scenarios", ctx.scenarios, "Directory of shipped scenarios")->required();
  app.add_option("--work", ctx.work, "Scratch directory")->required();
  app.add_option("--only", only, "Comma-separated criterion numbers to run");
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    std::string name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "closed-form models", 1.0, closed_form_models},
      {2, "fit recovery", 5.0, fit_recovery},
      {3, "beam vs exhaustive", 300.0, beam_vs_exhaustive},
      {4, "baseline dominance", 300.0, baseline_dominance},
      {5, "scale-down replay", 120.0, [&] { return scale_down(ctx); }},
      {6, "transaction scale-up replay", 0.0, [&] { return txn_scale_up(ctx); }},
      {7, "sensitivity harness", 300.0, [&] { return sensitivity(ctx); }},
      {8, "router quality", 0.0, router},
      {9, "oracle consistency", 0.0, [&] { return oracle_consistency(ctx); }},
      {10, "CLI determinism", 0.0, [&] { return cli_determinism(ctx); }},
      {11, "transition arithmetic", 0.0, transition_arithmetic},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && ("," + only + ",").find("," + std::to_string(c.id) + ",") == std::string::npos) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt(secs) + " s";
    if (c.limit_s > 0.0) {
      timing += " (limit " + fmt(c.limit_s) + " s)";
      if (secs > c.limit_s) {
        out.pass = false;
        out.detail += "; over time limit";
      }
    }
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << c.id << " " << c.name << ": " << out.detail << " ["
              << timing << "]" << std::endl;
    failed += !out.pass;
  }
  return failed;
}
