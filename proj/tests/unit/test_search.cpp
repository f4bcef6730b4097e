#include "fixtures.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/search.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace blueprintd;

namespace {

/// Keeps the instance alive next to the scorer that references it.
struct Bound {
  SearchInstance inst;
  ScoringInputs inputs;
  CandidateScorer scorer;

  explicit Bound(SearchInstance i)
      : inst(std::move(i)),
        inputs{inst.catalog, inst.pricing, inst.caps, inst.models, inst.load, inst.scoring},
        scorer(inst.current, inst.window, inst.predictions, inputs) {}
};

std::set<std::pair<std::size_t, int>> lattice_points(const std::vector<Provisioning>& options,
                                                     const ProvisioningLattice& lattice) {
  std::set<std::pair<std::size_t, int>> out;
  for (const auto& p : options) {
    const auto& types = lattice.instance_types[engine_index(p.engine)];
    const auto it = std::find_if(types.begin(), types.end(), [&](const auto& t) { return t.name == p.instance_type; });
    out.insert({static_cast<std::size_t>(it - types.begin()), p.node_count});
  }
  return out;
}

double best_w(const CandidateScorer& scorer, const ProvisioningSet& prov, const Objective& obj,
              std::span<const std::size_t> order, std::size_t k) {
  const auto r = beam_search(scorer, prov, obj, k, order);
  return r ? r->w : std::numeric_limits<double>::infinity();
}

} // namespace

TEST_SUITE("search") {
  TEST_CASE("radius one neighbours of a mid-lattice RowStore") {
    const auto lattice = ProvisioningLattice::from_pricing(reference_pricing(), 1, 64);
    const auto current = lattice.at(EngineId::RowStore, 2, 1);
    const auto points = lattice_points(engine_neighbors(current, lattice), lattice);
    const std::set<std::pair<std::size_t, int>> expected{{1, 1}, {2, 1}, {3, 1}, {2, 2}, {2, 0}};
    CHECK(points == expected);
  }

  TEST_CASE("radius zero keeps only the current provisioning") {
    const auto lattice = ProvisioningLattice::from_pricing(reference_pricing(), 0, 64);
    const ProvisioningSet current{lattice.at(EngineId::RowStore, 2, 1), lattice.at(EngineId::Warehouse, 0, 2),
                                  Provisioning{EngineId::ScanService, "", 0, 1}};
    const auto all = enumerate_neighbor_provisionings(current, lattice);
    REQUIRE(all.size() == 1);
    CHECK(all[0] == current);
  }

  TEST_CASE("a paused engine may resume at the smallest instance") {
    const auto lattice = ProvisioningLattice::from_pricing(reference_pricing(), 1, 64);
    const auto paused = lattice.at(EngineId::Warehouse, 2, 0);
    const auto points = lattice_points(engine_neighbors(paused, lattice), lattice);
    CHECK(points.count({0, 1}) == 1);
    CHECK(points.count({2, 0}) == 1);
  }

  TEST_CASE("neighbour provisionings are the deduplicated product") {
    const auto lattice = ProvisioningLattice::from_pricing(reference_pricing(), 2, 64);
    const ProvisioningSet current{lattice.at(EngineId::RowStore, 1, 2), lattice.at(EngineId::Warehouse, 1, 4),
                                  Provisioning{EngineId::ScanService, "", 0, 1}};
    const auto all = enumerate_neighbor_provisionings(current, lattice);
    const auto rs = engine_neighbors(current[0], lattice).size();
    const auto wh = engine_neighbors(current[1], lattice).size();
    CHECK(all.size() == rs * wh);
    CHECK(std::find(all.begin(), all.end(), current) != all.end());
    std::set<std::string> seen;
    for (const auto& p : all) seen.insert(to_string(p[0]) + "|" + to_string(p[1]));
    CHECK(seen.size() == all.size());
    CHECK(enumerate_neighbor_provisionings(current, lattice) == all);
  }

  TEST_CASE("query order: rate, then speedup, then id") {
    WorkloadWindow w;
    w.queries = {make_workload_query("SELECT a.x FROM a", 5, "slow3"), make_workload_query("SELECT a.y FROM a", 10, "fast2"),
                 make_workload_query("SELECT a.id FROM a", 5, "mid8")};
    const std::vector<QueryPrediction> p{{{3, 1, 2}, 0}, {{2, 1, 1.5}, 0}, {{8, 1, 4}, 0}};
    CHECK(order_queries(w, p) == std::vector<std::size_t>{1, 2, 0});

    WorkloadWindow tie;
    tie.queries = {make_workload_query("SELECT a.x FROM a", 1, "c"), make_workload_query("SELECT a.y FROM a", 1, "a"),
                   make_workload_query("SELECT a.id FROM a", 1, "b")};
    const std::vector<QueryPrediction> flat(3, QueryPrediction{{1, 2, 3}, 0});
    CHECK(order_queries(tie, flat) == std::vector<std::size_t>{1, 2, 0});

    WorkloadWindow one;
    one.queries = {make_workload_query("SELECT a.x FROM a", 1, "only")};
    CHECK(order_queries(one, std::span(flat).first(1)) == std::vector<std::size_t>{0});
  }

  TEST_CASE("single query beam of width one picks the best eligible engine") {
    Bound b(generate_search_instance(3, 1));
    const auto order = order_queries(b.inst.window, b.inst.predictions);
    for (const auto& prov : b.inst.provisionings) {
      const auto r = beam_search(b.scorer, prov, b.inst.objective, 1, order);
      const auto prep = b.scorer.prepare(prov);
      std::optional<RankKey> best;
      for (std::int8_t e = 0; e < 3; ++e) {
        if (!((prep.eligible[0] >> e) & 1u)) continue;
        VectorScore s;
        const std::vector<std::int8_t> assignment{e};
        b.scorer.score(prep, assignment, s);
        const auto key = rank_key(s, b.inst.objective.metrics, b.inst.objective.slo);
        if (!best || key < *best) best = key;
      }
      REQUIRE(r.has_value() == best.has_value());
      if (r) CHECK(r->key(b.inst.objective) == *best);
    }
  }

  TEST_CASE("two queries on one provisioning: exhaustive scores all nine assignments") {
    Bound b(generate_search_instance(5, 2));
    const std::vector<ProvisioningSet> one{b.inst.provisionings.front()};
    const auto r = exhaustive_search(b.scorer, one, b.inst.objective);
    CHECK(r.candidates_scored == 9);
    const auto prep = b.scorer.prepare(one[0]);
    std::optional<RankKey> best;
    for (std::int8_t x = 0; x < 3; ++x) {
      for (std::int8_t y = 0; y < 3; ++y) {
        VectorScore s;
        const std::vector<std::int8_t> assignment{x, y};
        b.scorer.score(prep, assignment, s);
        const auto key = rank_key(s, b.inst.objective.metrics, b.inst.objective.slo);
        if (!best || key < *best) best = key;
      }
    }
    CHECK(r.key(b.inst.objective) == *best);
  }

  TEST_CASE("oversized exhaustive searches are refused") {
    Bound b(generate_search_instance(7, 30));
    CHECK_THROWS_AS(exhaustive_search(b.scorer, b.inst.provisionings, b.inst.objective), SearchSpaceTooLarge);
  }

  TEST_CASE("impossible SLOs leave no feasible blueprint") {
    auto inst = generate_search_instance(9, 4);
    inst.objective.slo.txn_p90_s = 1e-300;
    inst.objective.slo.query_p90_s = 1e-300;
    Bound b(std::move(inst));
    CHECK_THROWS_AS(plan(b.scorer, b.inst.current, b.inst.objective, {}), NoFeasibleBlueprint);
  }

  TEST_CASE("property: wide beams match exhaustive search per provisioning") {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      Bound b(generate_search_instance(seed, 6));
      const auto order = order_queries(b.inst.window, b.inst.predictions);
      for (const auto& prov : b.inst.provisionings) {
        const std::vector<ProvisioningSet> one{prov};
        double ex_w = std::numeric_limits<double>::infinity();
        try {
          ex_w = exhaustive_search(b.scorer, one, b.inst.objective).w;
        } catch (const NoFeasibleBlueprint&) {
        }
        CHECK(best_w(b.scorer, prov, b.inst.objective, order, 729) == ex_w);
      }
    }
  }

  TEST_CASE("property: wider beams are never worse") {
    for (std::uint64_t seed = 200; seed < 215; ++seed) {
      Bound b(generate_search_instance(seed, 9));
      const auto order = order_queries(b.inst.window, b.inst.predictions);
      for (const auto& prov : b.inst.provisionings) {
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t k : {1, 3, 10, 30, 100}) {
          const double w = best_w(b.scorer, prov, b.inst.objective, order, k);
          CHECK(w <= prev);
          prev = w;
        }
      }
    }
  }

  TEST_CASE("property: planned blueprints validate, beat naive greedy and are deterministic") {
    for (std::uint64_t seed = 300; seed < 320; ++seed) {
      Bound b(generate_search_instance(seed, 8));
      PlanResult r;
      try {
        r = plan(b.scorer, b.inst.current, b.inst.objective, {});
      } catch (const NoFeasibleBlueprint&) {
        CHECK(std::isinf(naive_greedy(b.scorer, b.inst.provisionings, b.inst.objective).w));
        continue;
      }
      CHECK(validate_blueprint(r.blueprint, b.inst.catalog, b.inst.window.queries).empty());
      const auto lattice = ProvisioningLattice::from_pricing(b.inst.pricing, 1, 64);
      const auto provs = enumerate_neighbor_provisionings(b.scorer.current_provisionings(), lattice);
      CHECK(r.w <= naive_greedy(b.scorer, provs, b.inst.objective).w);
      CHECK(r.w <= r.current_w);
      const auto again = plan(b.scorer, b.inst.current, b.inst.objective, {});
      CHECK(again.blueprint.canonical() == r.blueprint.canonical());
      CHECK(again.w == r.w);
      const std::size_t bound = 100 * 3 * b.inst.window.size() * provs.size();
      CHECK(r.candidates_scored <= bound);
    }
  }

  TEST_CASE("a large radius on a tiny workload reaches the global optimum") {
    for (std::uint64_t seed = 400; seed < 405; ++seed) {
      Bound b(generate_search_instance(seed, 2));
      PlanConfig cfg;
      cfg.radius = 3;
      const auto lattice = ProvisioningLattice::from_pricing(b.inst.pricing, cfg.radius, cfg.max_nodes);
      const auto provs = enumerate_neighbor_provisionings(b.scorer.current_provisionings(), lattice);
      const auto ex = exhaustive_search(b.scorer, provs, b.inst.objective);
      PlanResult r;
      try {
        r = plan(b.scorer, b.inst.current, b.inst.objective, cfg);
      } catch (const NoFeasibleBlueprint&) {
        CHECK(std::isinf(ex.w));
        continue;
      }
      CHECK(r.w <= ex.w);
      if (!r.kept_current) CHECK(r.w == ex.w);
    }
  }

  TEST_CASE("the current blueprint wins exact ties") {
    std::size_t ties = 0;
    for (std::uint64_t seed = 500; seed < 540; ++seed) {
      Bound b(generate_search_instance(seed, 4));
      PlanConfig cfg;
      cfg.radius = 0;
      PlanResult r;
      try {
        r = plan(b.scorer, b.inst.current, b.inst.objective, cfg);
      } catch (const NoFeasibleBlueprint&) {
        continue;
      }
      CHECK(r.w <= r.current_w);
      // Equal W with no transition implies equal operating cost.
      if (r.w == r.current_w && r.score.transition_time_s == 0.0) {
        ++ties;
        CHECK(r.kept_current);
      }
    }
    CHECK(ties > 0);
  }
}
