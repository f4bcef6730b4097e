#include "blueprintd/scenario.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const fs::path kScenarios{BLUEPRINTD_SCENARIO_DIR};

int run(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + (env.empty() ? "" : " ") + BLUEPRINTD_CLI + std::string(" ") + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("blueprintd_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

} // namespace

TEST_SUITE("cli") {
  TEST_CASE("missing scenario file exits with 2") {
    const auto out = scratch("missing");
    CHECK(run("simulate --scenario " + (out / "nope.json").string() + " --out " + out.string()) == 2);
    CHECK(run("plan --scenario " + (out / "nope.json").string() + " --out " + out.string()) == 2);
  }

  TEST_CASE("usage errors exit with 2") {
    CHECK(run("") == 2);
    CHECK(run("simulate") == 2);
    CHECK(run("frobnicate") == 2);
  }

  TEST_CASE("same seed gives byte-identical simulate outputs") {
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    const auto sc = (kScenarios / "flat.json").string();
    REQUIRE(run("simulate --scenario " + sc + " --out " + a.string() + " --seed 5") == 0);
    REQUIRE(run("simulate --scenario " + sc + " --out " + b.string() + " --seed 5") == 0);
    for (const char* f : {"metrics.csv", "events.json", "summary.json"}) {
      CAPTURE(f);
      CHECK(fs::exists(a / f));
      CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK_FALSE(fs::exists(a / "metrics.csv.tmp"));
  }

  TEST_CASE("the seed environment variable overrides the flag") {
    const auto a = scratch("env_a");
    const auto b = scratch("env_b");
    const auto sc = (kScenarios / "flat.json").string();
    REQUIRE(run("simulate --scenario " + sc + " --out " + a.string() + " --seed 9") == 0);
    REQUIRE(run("simulate --scenario " + sc + " --out " + b.string() + " --seed 1", "BLUEPRINTD_SEED=9") == 0);
    CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
  }

  TEST_CASE("unsatisfiable SLOs exit with 3") {
    const auto dir = scratch("infeasible");
    auto doc = blueprintd::load_json_file(kScenarios / "scale_down.json");
    doc["slo"]["query_p90_s"] = 1e-9;
    doc["slo"]["txn_p90_s"] = 1e-9;
    doc["catalog"] = (kScenarios / "catalog.json").string();
    doc["pricing"] = (kScenarios / "pricing.json").string();
    doc["phases"][0]["workload"] = (kScenarios / "analytics.jsonl").string();
    const auto path = dir / "scenario.json";
    std::ofstream(path) << doc.dump();
    CHECK(run("plan --scenario " + path.string() + " --out " + dir.string()) == 3);
  }

  TEST_CASE("fit reads observations and writes constants") {
    const auto dir = scratch("fit");
    {
      std::ofstream csv(dir / "obs.csv");
      csv << "base_runtime_s,dest_vcpus,runtime_s\n";
      for (int d : {1, 2, 4, 8}) csv << 10 << "," << d << "," << (0.9 * 4.0 / d + 0.1) * 10 << "\n";
    }
    REQUIRE(run("fit --observations " + (dir / "obs.csv").string() + " --kind provisioning --base-vcpus 4 --out " +
                (dir / "fit.json").string()) == 0);
    const auto fit = nlohmann::json::parse(slurp(dir / "fit.json"));
    CHECK(fit["c1"].get<double>() == doctest::Approx(0.9).epsilon(1e-9));
    CHECK(fit["c2"].get<double>() == doctest::Approx(0.1).epsilon(1e-9));
  }
}
