#include "blueprintd/router.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/hash.hpp"
#include "blueprintd/selectivity.hpp"
#include "blueprintd/stats.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace blueprintd {

std::vector<std::string> routing_feature_names(const DatasetCatalog& catalog) {
  std::vector<std::string> names{"total_card", "table_count", "join_count"};
  for (const auto& t : catalog.tables()) names.push_back("card:" + t.name);
  return names;
}

std::vector<double> routing_features(const LogicalQuery& q, const DatasetCatalog& catalog) {
  std::vector<double> f(3 + catalog.size(), 0.0);
  const auto cards = scan_cardinalities(q, catalog);
  for (std::size_t i = 0; i < q.tables.size(); ++i) {
    f[0] += cards[i];
    f[3 + *catalog.index_of(q.tables[i])] = cards[i];
  }
  f[1] = static_cast<double>(q.tables.size());
  f[2] = static_cast<double>(q.join_predicates.size());
  return f;
}

RoutingForest::RoutingForest(std::vector<std::string> feature_names, std::vector<Tree> trees, int max_depth)
    : feature_names_(std::move(feature_names)), trees_(std::move(trees)), max_depth_(max_depth) {
  if (trees_.empty()) throw ConfigError("routing forest needs at least one tree");
  for (const auto& t : trees_) {
    if (t.nodes.empty()) throw ConfigError("routing tree without nodes");
  }
}

namespace {

EngineRanking borda(std::span<const EngineRanking> rankings, std::span<const double> weights = {}) {
  std::array<double, kEngineCount> points{};
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    for (std::size_t pos = 0; pos < kEngineCount; ++pos) {
      points[engine_index(rankings[i][pos])] += w * static_cast<double>(kEngineCount - 1 - pos);
    }
  }
  EngineRanking out = kAllEngines;
  std::stable_sort(out.begin(), out.end(),
                   [&](EngineId a, EngineId b) { return points[engine_index(a)] > points[engine_index(b)]; });
  return out;
}

std::size_t tree_depth(const RoutingForest::Tree& t, int node) {
  const auto& n = t.nodes[static_cast<std::size_t>(node)];
  if (n.leaf()) return 1;
  return 1 + std::max(tree_depth(t, n.left), tree_depth(t, n.right));
}

} // namespace

EngineRanking RoutingForest::rank(std::span<const double> features, std::size_t* visited) const {
  std::vector<EngineRanking> leaves;
  leaves.reserve(trees_.size());
  for (const auto& tree : trees_) {
    int i = 0;
    while (true) {
      const auto& node = tree.nodes[static_cast<std::size_t>(i)];
      if (visited) ++*visited;
      if (node.leaf()) {
        leaves.push_back(node.ranking);
        break;
      }
      const double v = static_cast<std::size_t>(node.feature) < features.size() ? features[node.feature] : 0.0;
      i = v <= node.threshold ? node.left : node.right;
    }
  }
  return borda(leaves);
}

std::size_t RoutingForest::depth() const {
  std::size_t d = 0;
  for (const auto& t : trees_) d = std::max(d, tree_depth(t, 0));
  return d;
}

nlohmann::json RoutingForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      if (n.leaf()) {
        nlohmann::json ranking = nlohmann::json::array();
        for (auto e : n.ranking) ranking.push_back(std::string(to_string(e)));
        nodes.push_back({{"ranking", ranking}});
      } else {
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
      }
    }
    trees.push_back({{"nodes", nodes}});
  }
  return {{"features", feature_names_}, {"max_depth", max_depth_}, {"trees", trees}};
}

RoutingForest RoutingForest::from_json(const nlohmann::json& doc) {
  try {
    std::vector<Tree> trees;
    for (const auto& jt : doc.at("trees")) {
      Tree t;
      for (const auto& jn : jt.at("nodes")) {
        Node n;
        if (jn.contains("ranking")) {
          std::size_t i = 0;
          for (const auto& e : jn.at("ranking")) {
            if (i >= kEngineCount) throw ConfigError("ranking longer than the engine set");
            n.ranking[i++] = engine_from_string(e.get<std::string>());
          }
          if (i != kEngineCount) throw ConfigError("ranking must list every engine");
        } else {
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
        }
        t.nodes.push_back(n);
      }
      trees.push_back(std::move(t));
    }
    return RoutingForest(doc.at("features").get<std::vector<std::string>>(), std::move(trees),
                         doc.at("max_depth").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("routing forest: ") + e.what());
  }
}

EngineRanking ranking_from_runtimes(const std::array<double, kEngineCount>& runtimes) {
  EngineRanking out = kAllEngines;
  std::stable_sort(out.begin(), out.end(),
                   [&](EngineId a, EngineId b) { return runtimes[engine_index(a)] < runtimes[engine_index(b)]; });
  return out;
}

namespace {

struct Sample {
  std::vector<double> features;
  EngineRanking ranking;
};

double gini(const std::array<double, kEngineCount>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double g = 1.0;
  for (double c : counts) g -= (c / total) * (c / total);
  return g;
}

class TreeBuilder {
public:
  TreeBuilder(const std::vector<Sample>& samples, int max_depth) : samples_(samples), max_depth_(max_depth) {}

  RoutingForest::Tree build(std::vector<std::size_t> idx) {
    tree_.nodes.clear();
    grow(std::move(idx), 1);
    return std::move(tree_);
  }

private:
  int grow(std::vector<std::size_t> idx, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::vector<EngineRanking> rankings;
    std::array<double, kEngineCount> counts{};
    for (auto i : idx) {
      rankings.push_back(samples_[i].ranking);
      counts[engine_index(samples_[i].ranking[0])] += 1.0;
    }
    tree_.nodes[static_cast<std::size_t>(id)].ranking = borda(rankings);

    const double total = static_cast<double>(idx.size());
    const double parent = gini(counts, total);
    if (depth >= max_depth_ || idx.size() < 2 || parent <= 0.0) return id;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = parent - 1e-12;
    const std::size_t n_features = samples_[idx[0]].features.size();
    std::vector<std::size_t> sorted = idx;
    for (std::size_t f = 0; f < n_features; ++f) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return samples_[a].features[f] < samples_[b].features[f];
      });
      std::array<double, kEngineCount> left{};
      for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        left[engine_index(samples_[sorted[k]].ranking[0])] += 1.0;
        const double v = samples_[sorted[k]].features[f];
        const double next = samples_[sorted[k + 1]].features[f];
        if (!(v < next)) continue;
        std::array<double, kEngineCount> right{};
        for (std::size_t e = 0; e < kEngineCount; ++e) right[e] = counts[e] - left[e];
        const double nl = static_cast<double>(k + 1);
        const double nr = total - nl;
        const double impurity = (nl * gini(left, nl) + nr * gini(right, nr)) / total;
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = v + (next - v) / 2.0;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> lo, hi;
    for (auto i : idx) {
      (samples_[i].features[static_cast<std::size_t>(best_feature)] <= best_threshold ? lo : hi).push_back(i);
    }
    const int l = grow(std::move(lo), depth + 1);
    const int r = grow(std::move(hi), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const std::vector<Sample>& samples_;
  int max_depth_;
  RoutingForest::Tree tree_;
};

} // namespace

RoutingForest train_routing_forest(const WorkloadWindow& w, std::span<const QueryPrediction> predictions,
                                   const DatasetCatalog& catalog, const RoutingForestConfig& cfg) {
  if (w.queries.empty()) throw EmptyWorkload("cannot train a routing forest without queries");
  if (predictions.size() != w.queries.size()) throw ConfigError("predictions must cover every workload query");
  if (cfg.n_trees < 1 || cfg.max_depth < 1 || !(cfg.bootstrap_fraction > 0.0)) {
    throw ConfigError("invalid routing forest configuration");
  }
  std::vector<Sample> samples;
  samples.reserve(w.queries.size());
  for (std::size_t i = 0; i < w.queries.size(); ++i) {
    samples.push_back({routing_features(w.queries[i].query, catalog), ranking_from_runtimes(predictions[i].runtime_s)});
  }
  const auto draw = std::max<std::size_t>(
      1, static_cast<std::size_t>(cfg.bootstrap_fraction * static_cast<double>(samples.size()) + 0.5));
  std::vector<RoutingForest::Tree> trees;
  TreeBuilder builder(samples, cfg.max_depth);
  for (int t = 0; t < cfg.n_trees; ++t) {
    std::mt19937_64 rng(mix64(cfg.seed + static_cast<std::uint64_t>(t)));
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    std::vector<std::size_t> idx(draw);
    for (auto& i : idx) i = pick(rng);
    trees.push_back(builder.build(std::move(idx)));
  }
  return RoutingForest(routing_feature_names(catalog), std::move(trees), cfg.max_depth);
}

EngineId route(const WorkloadQuery& q, const Blueprint& bp, const RoutingForest* forest,
               const CapabilityConfig& caps, const DatasetCatalog& catalog) {
  const EngineSet eligible = eligible_engines(q.query, bp, caps);
  if (auto it = bp.routing.assignments.find(q.query_id);
      it != bp.routing.assignments.end() && eligible.contains(it->second)) {
    return it->second;
  }
  const EngineRanking ranking = forest ? forest->rank(routing_features(q.query, catalog)) : kAllEngines;
  for (auto e : ranking) {
    if (eligible.contains(e)) return e;
  }
  throw EmptyEligibleSet("no ranked engine is eligible for " + q.query_id);
}

double routing_slowdown(std::span<const RoutingDecision> decisions) {
  std::vector<double> ratios;
  ratios.reserve(decisions.size());
  for (const auto& d : decisions) {
    const double best = *std::min_element(d.runtimes.begin(), d.runtimes.end());
    if (!(best > 0.0)) throw NonPositiveInput("routing run times must be positive");
    ratios.push_back(d.runtimes[engine_index(d.chosen)] / best);
  }
  return geometric_mean(ratios);
}

} // namespace blueprintd
