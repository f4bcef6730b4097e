// Command-line entry points: simulate, plan, fit, route-eval, sensitivity,
// search-compare.

#include "blueprintd/errors.hpp"
#include "blueprintd/fitting.hpp"
#include "blueprintd/harness.hpp"
#include "blueprintd/scenario.hpp"
#include "blueprintd/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace blueprintd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw ConfigError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

void emit(const std::string& out_path, const nlohmann::json& doc) {
  const auto text = doc.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_atomic(out_path, text);
  }
}

std::uint64_t effective_seed(std::uint64_t flag) {
  if (const char* env = std::getenv("BLUEPRINTD_SEED"); env && *env) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("BLUEPRINTD_SEED must be an unsigned integer");
    }
  }
  return flag;
}

ScenarioConfig load_scenario(const std::string& path, std::optional<std::uint64_t> seed) {
  auto sc = ScenarioConfig::load(path);
  if (seed) sc.seed = *seed;
  if (const char* env = std::getenv("BLUEPRINTD_SEED"); env && *env) sc.seed = effective_seed(sc.seed);
  return sc;
}

double tidy(double v) { return std::round(v * 1e9) / 1e9 + 0.0; }

/// "a,b,c" or "lo..hi" with an optional ":step" (default 0.2).
std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  try {
    if (const auto dots = text.find(".."); dots != std::string::npos) {
      const double lo = std::stod(text.substr(0, dots));
      auto rest = text.substr(dots + 2);
      double step = 0.2;
      if (const auto colon = rest.find(':'); colon != std::string::npos) {
        step = std::stod(rest.substr(colon + 1));
        rest = rest.substr(0, colon);
      }
      const double hi = std::stod(rest);
      if (!(step > 0.0) || hi < lo) throw ConfigError("invalid range " + text);
      const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
      for (long i = 0; i <= n; ++i) out.push_back(tidy(lo + static_cast<double>(i) * step));
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(tidy(std::stod(item)));
      }
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError("cannot parse values '" + text + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("value out of range in '" + text + "'");
  }
  if (out.empty()) throw ConfigError("no values in '" + text + "'");
  return out;
}

std::vector<std::vector<double>> read_csv_numbers(const fs::path& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    try {
      while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError("non-numeric cell in " + path.string() + ": " + line);
    }
    if (row.size() != columns) throw ConfigError("expected " + std::to_string(columns) + " columns: " + line);
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir, std::optional<std::uint64_t> seed) {
  const auto sc = load_scenario(scenario_path, seed);
  const auto result = run_scenario(sc);
  const fs::path dir(out_dir);
  write_atomic(dir / "metrics.csv", result.log.to_csv());
  write_atomic(dir / "events.json", result.log.events_json().dump(2) + "\n");
  write_atomic(dir / "summary.json", result.log.summary.dump(2) + "\n");
  std::cout << "cost " << result.log.summary["cost_initial"] << " -> " << result.log.summary["cost_final"]
            << " $/h, changes " << result.log.summary["change_count"] << ", slo compliance "
            << result.log.summary["slo_compliance"] << "\n";
  return kExitOk;
}

int cmd_plan(const std::string& scenario_path, const std::string& out_dir, std::optional<std::uint64_t> seed) {
  const auto sc = load_scenario(scenario_path, seed);
  auto truth = std::make_shared<const EngineGroundTruth>(sc.catalog, sc.truth);
  RunOptions opt;
  opt.stop_at_first_trigger = true;
  const auto run = run_scenario(sc, opt);
  if (run.snapshots.empty()) throw ConfigError("scenario never triggers planning");
  const auto& snap = run.snapshots.front();
  const auto predictor = make_predictor(sc.planning, truth);
  const auto result = plan_from_snapshot(snap, sc, *predictor);
  const auto diff = diff_blueprints(snap.current, result.blueprint, sc.catalog);
  const auto est = transition_time_cost(diff, sc.pricing, warehouse_data_bytes(snap.current, sc.catalog));
  nlohmann::json report = result.to_json();
  report["snapshot"] = snap.to_json();
  report["transition"] = diff.to_json();
  report["transition_time_s"] = est.time_s;
  report["transition_cost"] = est.cost;
  write_atomic(fs::path(out_dir) / "plan.json", report.dump(2) + "\n");
  std::cout << (result.kept_current ? "kept current blueprint" : "selected new blueprint") << ", W = " << result.w
            << "\n";
  return kExitOk;
}

int cmd_fit(const std::string& observations, const std::string& kind, int base_vcpus, const std::string& out) {
  nlohmann::json doc;
  if (kind == "provisioning") {
    std::vector<ProvisioningObservation> obs;
    for (const auto& r : read_csv_numbers(observations, 3)) obs.push_back({r[0], static_cast<int>(r[1]), r[2]});
    doc = fit_provisioning_constants(obs, base_vcpus).to_json();
  } else if (kind == "txn") {
    std::vector<TxnObservation> obs;
    for (const auto& r : read_csv_numbers(observations, 2)) obs.push_back({r[0], r[1]});
    doc = fit_txn_model(obs).to_json();
  } else {
    throw ConfigError("--kind must be provisioning or txn");
  }
  emit(out, doc);
  return kExitOk;
}

int cmd_route_eval(const std::string& scenario_path, std::size_t queries, std::uint64_t seed, const std::string& out) {
  GroundTruthParams truth;
  RoutingForestConfig forest;
  if (!scenario_path.empty()) {
    const auto sc = ScenarioConfig::load(scenario_path);
    truth = sc.truth;
    forest = sc.planning.forest;
  }
  emit(out, evaluate_router(queries, effective_seed(seed), truth, forest).to_json());
  return kExitOk;
}

int cmd_sensitivity(const std::string& scenario_path, const std::string& fractions, const std::string& errors,
                    std::size_t seeds, std::optional<std::uint64_t> seed, const std::string& out) {
  const auto sc = load_scenario(scenario_path, seed);
  const auto f = parse_values(fractions);
  const auto e = parse_values(errors);
  emit(out, run_sensitivity(sc, f, e, seeds).to_json());
  return kExitOk;
}

int cmd_search_compare(const std::string& workload, std::size_t max_queries, const std::string& scenario_path,
                       std::uint64_t seed, const std::string& out) {
  const auto sc = ScenarioConfig::load(scenario_path);
  auto queries = load_workload_jsonl(workload, sc.caps.keyword_list());
  auto truth = std::make_shared<const EngineGroundTruth>(sc.catalog, sc.truth);
  RunOptions opt;
  opt.stop_at_first_trigger = true;
  const auto run = run_scenario(sc, opt);
  PlanningSnapshot snap;
  if (!run.snapshots.empty()) {
    snap = run.snapshots.front();
  } else {
    snap.current = sc.initial;
    snap.models = bootstrap_models(*truth, queries);
  }
  const auto predictor = make_predictor(sc.planning, truth);
  const auto inst = search_instance_from_snapshot(sc, snap, std::move(queries), max_queries, *predictor);
  auto report = compare_search(inst, sc.planning.beam_width, 10000, effective_seed(seed)).to_json();
  report["beam_matches_exhaustive"] = report["beam_w"] == report["exhaustive_w"];
  emit(out, report);
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blueprint planner and multi-engine simulator"};
  app.require_subcommand(1);

  std::string scenario, out, observations, kind, workload, fractions = "0.1,0.2,0.4,0.8", errors = "-0.8..0.8";
  std::uint64_t seed = 1;
  int base_vcpus = 1;
  std::size_t queries = 1000, seeds = 5, max_queries = 12;

  auto* simulate = app.add_subcommand("simulate", "Replay a scenario and write metrics, events and a summary");
  simulate->add_option("--scenario", scenario, "Scenario JSON")->required();
  simulate->add_option("--out", out, "Output directory")->required();
  auto* sim_seed = simulate->add_option("--seed", seed, "Arrival seed");

  auto* plan_cmd = app.add_subcommand("plan", "Plan from the scenario's first trigger snapshot");
  plan_cmd->add_option("--scenario", scenario, "Scenario JSON")->required();
  plan_cmd->add_option("--out", out, "Output directory")->required();
  auto* plan_seed = plan_cmd->add_option("--seed", seed, "Arrival seed");

  auto* fit = app.add_subcommand("fit", "Fit provisioning or transaction model constants");
  fit->add_option("--observations", observations, "CSV with a header row")->required();
  fit->add_option("--kind", kind, "provisioning or txn")->required();
  fit->add_option("--base-vcpus", base_vcpus, "Base vCPU count for provisioning fits");
  fit->add_option("--out", out, "Output JSON (stdout when omitted)");

  auto* route_eval = app.add_subcommand("route-eval", "Evaluate forest routing on a synthetic workload");
  route_eval->add_option("--scenario", scenario, "Scenario JSON supplying ground truth parameters");
  route_eval->add_option("--queries", queries, "Workload size");
  route_eval->add_option("--seed", seed, "Workload seed");
  route_eval->add_option("--out", out, "Output JSON (stdout when omitted)");

  auto* sensitivity = app.add_subcommand("sensitivity", "Selection stability under injected prediction errors");
  sensitivity->add_option("--scenario", scenario, "Scenario JSON")->required();
  sensitivity->add_option("--fractions", fractions, "Perturbed fractions: list or lo..hi[:step]");
  sensitivity->add_option("--errors", errors, "Multiplicative errors: list or lo..hi[:step]");
  sensitivity->add_option("--seeds", seeds, "Noise seeds per cell");
  auto* sens_seed = sensitivity->add_option("--seed", seed, "Scenario seed");
  sensitivity->add_option("--out", out, "Output JSON (stdout when omitted)");

  auto* search_compare = app.add_subcommand("search-compare", "Beam search against exhaustive and baselines");
  search_compare->add_option("--workload", workload, "Workload JSONL")->required();
  search_compare->add_option("--max-queries", max_queries, "Queries kept from the workload");
  search_compare->add_option("--scenario", scenario, "Scenario JSON for catalog, pricing and load")->required();
  search_compare->add_option("--seed", seed, "Random baseline seed");
  search_compare->add_option("--out", out, "Output JSON (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto opt_seed = [&](CLI::Option* o) { return o->count() ? std::optional<std::uint64_t>(seed) : std::nullopt; };
  try {
    if (simulate->parsed()) return cmd_simulate(scenario, out, opt_seed(sim_seed));
    if (plan_cmd->parsed()) return cmd_plan(scenario, out, opt_seed(plan_seed));
    if (fit->parsed()) return cmd_fit(observations, kind, base_vcpus, out);
    if (route_eval->parsed()) return cmd_route_eval(scenario, queries, seed, out);
    if (sensitivity->parsed()) return cmd_sensitivity(scenario, fractions, errors, seeds, opt_seed(sens_seed), out);
    if (search_compare->parsed()) return cmd_search_compare(workload, max_queries, scenario, seed, out);
  } catch (const NoFeasibleBlueprint& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitConfig;
}
