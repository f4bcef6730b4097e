#include "fixtures.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/feature_graph.hpp"
#include "blueprintd/query.hpp"
#include "blueprintd/selectivity.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace blueprintd;

namespace {

/// Random query in the supported subset over fixtures::small_catalog().
std::string random_sql(std::mt19937_64& rng) {
  const std::vector<std::string> names{"a", "b", "t"};
  const std::vector<std::string> cols{"x", "y", "id"};
  const std::vector<std::string> ops{"<", "<=", ">", ">=", "=", "<>"};
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  const std::size_t n_tables = 1 + pick(3);
  std::vector<std::string> tables(names.begin(), names.begin() + static_cast<long>(n_tables));
  std::vector<std::string> conjuncts;
  for (std::size_t i = 1; i < n_tables; ++i) conjuncts.push_back(tables[i - 1] + ".id = " + tables[i] + ".id");
  const std::size_t n_filters = pick(3);
  for (std::size_t i = 0; i < n_filters; ++i) {
    std::ostringstream f;
    f << tables[pick(n_tables)] << "." << cols[pick(2)] << " " << ops[pick(ops.size())] << " " << pick(100);
    conjuncts.push_back(f.str());
  }

  std::string select;
  std::string group;
  switch (pick(3)) {
  case 0:
    select = tables[0] + ".x";
    break;
  case 1:
    select = "COUNT(*)";
    break;
  default:
    select = tables.back() + ".y, SUM(" + tables[0] + ".x)";
    group = " GROUP BY " + tables.back() + ".y";
    break;
  }
  std::string sql = "SELECT " + select + " FROM ";
  for (std::size_t i = 0; i < tables.size(); ++i) sql += (i ? ", " : "") + tables[i];
  for (std::size_t i = 0; i < conjuncts.size(); ++i) sql += (i ? " AND " : " WHERE ") + conjuncts[i];
  return sql + group;
}

std::size_t expected_node_count(const LogicalQuery& q) {
  return q.tables.size() + q.column_count() + q.filter_predicates.size() + q.join_predicates.size() +
         q.tables.size() + q.join_predicates.size() + (q.has_aggregation() ? 1 : 0) + 1;
}

} // namespace

TEST_SUITE("query_ir") {
  TEST_CASE("single-table aggregate with one filter") {
    const auto q = parse_query("SELECT COUNT(*) FROM t WHERE t.a > 5");
    CHECK(q.tables.size() == 1);
    CHECK(q.filter_predicates.size() == 1);
    CHECK(q.aggregates.size() == 1);
    CHECK(q.join_predicates.empty());
    CHECK(q.filter_predicates[0].op == CompareOp::Gt);
    CHECK(std::get<double>(q.filter_predicates[0].literal) == 5.0);
  }

  TEST_CASE("two-table equijoin with a filter") {
    const auto q = parse_query("SELECT a.x FROM a, b WHERE a.id = b.id AND b.y < 3");
    CHECK(q.tables.size() == 2);
    CHECK(q.join_predicates.size() == 1);
    CHECK(q.filter_predicates.size() == 1);
    CHECK(q.aggregates.empty());
  }

  TEST_CASE("vector distance operator is detected as a capability token") {
    const auto q = parse_query("SELECT * FROM t WHERE e <=> '[1,2]'");
    CHECK(std::find(q.capability_tokens.begin(), q.capability_tokens.end(), "<=>") != q.capability_tokens.end());
    CHECK(q.select_star);
  }

  TEST_CASE("unsupported syntax raises ParseError with a position") {
    CHECK_THROWS_AS(parse_query("SELECT a.x FROM a ORDER BY a.x"), ParseError);
    CHECK_THROWS_AS(parse_query("DELETE FROM a"), ParseError);
    try {
      parse_query("SELECT a.x FROM");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.position() <= std::string("SELECT a.x FROM").size());
    }
  }

  TEST_CASE("columns referenced from unlisted tables are rejected") {
    CHECK_THROWS_AS(parse_query("SELECT z.x FROM a"), ParseError);
  }

  TEST_CASE("query ids are stable under whitespace changes") {
    CHECK(query_id_for("SELECT a.x  FROM   a") == query_id_for(" SELECT a.x FROM a "));
    CHECK(query_id_for("SELECT a.x FROM a") != query_id_for("SELECT a.y FROM a"));
  }

  TEST_CASE("property: render then parse is the identity on parsed queries") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 500; ++i) {
      const auto sql = random_sql(rng);
      CAPTURE(sql);
      const auto q = parse_query(sql);
      CHECK(parse_query(render_query(q)) == q);
    }
  }

  TEST_CASE("feature graph of a filtered scan has five nodes") {
    const auto cat = fixtures::small_catalog();
    const auto g = build_feature_graph(parse_query("SELECT t.x FROM t WHERE t.x > 5"), cat);
    CHECK(g.nodes.size() == 5);
    CHECK(g.count(NodeType::Table) == 1);
    CHECK(g.count(NodeType::Column) == 1);
    CHECK(g.count(NodeType::Predicate) == 1);
    CHECK(g.count(NodeType::Operation) == 1);
    CHECK(g.count(NodeType::Embedding) == 1);
  }

  TEST_CASE("feature graph of an unfiltered equijoin has nine nodes") {
    const auto cat = fixtures::small_catalog();
    const auto g = build_feature_graph(parse_query("SELECT COUNT(*) FROM a, b WHERE a.id = b.id"), cat);
    // COUNT(*) adds an aggregate node on top of the join shape.
    CHECK(g.nodes.size() == 10);
    const auto g2 = build_feature_graph(parse_query("SELECT a.id FROM a, b WHERE a.id = b.id"), cat);
    CHECK(g2.nodes.size() == 9);
    CHECK(g2.count(NodeType::Table) == 2);
    CHECK(g2.count(NodeType::Column) == 2);
    CHECK(g2.count(NodeType::Predicate) == 1);
    CHECK(g2.count(NodeType::Operation) == 3);
  }

  TEST_CASE("no aggregate or group-by node without aggregation") {
    const auto cat = fixtures::small_catalog();
    const auto g = build_feature_graph(parse_query("SELECT a.x FROM a"), cat);
    for (const auto& n : g.nodes) {
      if (n.type != NodeType::Operation) continue;
      CHECK(n.features[0] == static_cast<double>(OperationKind::Scan));
    }
  }

  TEST_CASE("unknown tables are rejected by the featurizer") {
    CHECK_THROWS_AS(build_feature_graph(parse_query("SELECT q.x FROM q"), fixtures::small_catalog()), UnknownTable);
  }

  TEST_CASE("property: feature graphs are DAGs reaching the embedding with the expected node count") {
    const auto cat = fixtures::small_catalog();
    std::mt19937_64 rng(22);
    for (int i = 0; i < 500; ++i) {
      const auto sql = random_sql(rng);
      CAPTURE(sql);
      const auto q = parse_query(sql);
      const auto g = build_feature_graph(q, cat);
      CHECK(g.nodes.size() == expected_node_count(q));
      CHECK(g.count(NodeType::Embedding) == 1);
      CHECK(g.is_acyclic());
      CHECK(g.all_reach_embedding());
      for (const auto& n : g.nodes) {
        for (double f : n.features) CHECK((f >= 0.0 || f == kMissingFeature));
      }
    }
  }

  TEST_CASE("selectivity boundaries") {
    const auto cat = fixtures::small_catalog();
    const auto above_max = parse_query("SELECT a.x FROM a WHERE a.x > 100");
    const auto at_min = parse_query("SELECT a.x FROM a WHERE a.x >= 0");
    CHECK(filter_selectivity(above_max.filter_predicates[0], cat) == 0.0);
    CHECK(filter_selectivity(at_min.filter_predicates[0], cat) == 1.0);
  }

  TEST_CASE("uniform histogram midpoint") {
    const auto cat = fixtures::small_catalog();
    const auto q = parse_query("SELECT a.x FROM a WHERE a.x < 50");
    CHECK(filter_selectivity(q.filter_predicates[0], cat) == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("equijoin selectivity uses the larger distinct count") {
    const auto cat = DatasetCatalog({fixtures::table("l", 5000, 1e5, {{"k", 0, 1000, 1000}}),
                                     fixtures::table("r", 200, 1e4, {{"k", 0, 1000, 200}})});
    const auto q = parse_query("SELECT COUNT(*) FROM l, r WHERE l.k = r.k");
    CHECK(join_selectivity(q.join_predicates[0], cat) == doctest::Approx(1.0 / 1000.0).epsilon(1e-12));
  }

  TEST_CASE("missing histogram falls back to the default") {
    const auto cat = DatasetCatalog({fixtures::table("l", 10, 100, {})});
    const auto q = parse_query("SELECT l.v FROM l WHERE l.v < 3");
    CHECK(filter_selectivity(q.filter_predicates[0], cat) == kDefaultSelectivity);
  }

  TEST_CASE("property: selectivities lie in [0,1] and conjuncts multiply") {
    const auto cat = fixtures::small_catalog();
    std::mt19937_64 rng(23);
    for (int i = 0; i < 500; ++i) {
      const auto q = parse_query(random_sql(rng));
      const auto est = estimate_selectivity(q, cat);
      double product = 1.0;
      for (const auto& [t, s] : est.scan) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        double expected = 1.0;
        for (const auto& p : q.filter_predicates) {
          if (p.column.table == t) expected *= filter_selectivity(p, cat);
        }
        CHECK(s == doctest::Approx(expected).epsilon(1e-12));
        product *= s;
      }
      for (double j : est.join) {
        CHECK(j >= 0.0);
        CHECK(j <= 1.0);
        product *= j;
      }
      CHECK(est.combined == doctest::Approx(product).epsilon(1e-12));
    }
  }

  TEST_CASE("histogram invariants") {
    const auto h = Histogram::uniform(0, 100, 1000, 100);
    CHECK(h.valid());
    CHECK(h.counts.size() == kHistogramBuckets);
    const std::vector<double> values{1, 2, 2, 3, 10};
    CHECK(Histogram::from_values(values).valid());
    const std::vector<std::string> strings{"x", "y", "y"};
    const auto hs = Histogram::from_strings(strings);
    CHECK(hs.valid());
    CHECK(hs.fraction_equal("y") > 0.0);
  }
}
