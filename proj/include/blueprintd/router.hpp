#pragma once

#include "blueprintd/blueprint.hpp"
#include "blueprintd/catalog.hpp"
#include "blueprintd/predictor.hpp"
#include "blueprintd/workload.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace blueprintd {

using EngineRanking = std::array<EngineId, kEngineCount>;

/// Feature layout: total scan cardinality, table count, join count, then
/// the scan cardinality of each catalog table (0 when unreferenced).
std::vector<std::string> routing_feature_names(const DatasetCatalog& catalog);
std::vector<double> routing_features(const LogicalQuery& q, const DatasetCatalog& catalog);

struct RoutingForestConfig {
  int n_trees = 25;
  int max_depth = 6; // nodes on the longest root-to-leaf path
  double bootstrap_fraction = 1.0;
  std::uint64_t seed = 0x5eed;
};

class RoutingForest {
public:
  struct Node {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0; // value <= threshold goes left
    int left = -1;
    int right = -1;
    EngineRanking ranking{EngineId::RowStore, EngineId::Warehouse, EngineId::ScanService};

    bool leaf() const noexcept { return feature < 0; }
  };
  struct Tree {
    std::vector<Node> nodes; // nodes[0] is the root
  };

  RoutingForest(std::vector<std::string> feature_names, std::vector<Tree> trees, int max_depth);

  /// Borda count over the trees' leaf rankings; ties by engine order.
  /// `visited` accumulates the number of nodes touched.
  EngineRanking rank(std::span<const double> features, std::size_t* visited = nullptr) const;

  const std::vector<Tree>& trees() const noexcept { return trees_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  int max_depth() const noexcept { return max_depth_; }
  std::size_t depth() const; // deepest path in nodes

  nlohmann::json to_json() const;
  static RoutingForest from_json(const nlohmann::json& doc);

private:
  std::vector<std::string> feature_names_;
  std::vector<Tree> trees_;
  int max_depth_ = 1;
};

/// Engines sorted by run time ascending, ties by engine order.
EngineRanking ranking_from_runtimes(const std::array<double, kEngineCount>& runtimes);

/// CART trees (Gini impurity on the top-ranked engine) grown on bootstrap
/// samples. Throws EmptyWorkload.
RoutingForest train_routing_forest(const WorkloadWindow& w, std::span<const QueryPrediction> predictions,
                                   const DatasetCatalog& catalog, const RoutingForestConfig& cfg = {});

/// Pre-planned assignment when eligible, else the first eligible engine of
/// the forest ranking (engine order without a forest).
EngineId route(const WorkloadQuery& q, const Blueprint& bp, const RoutingForest* forest,
               const CapabilityConfig& caps, const DatasetCatalog& catalog);

struct RoutingDecision {
  EngineId chosen = EngineId::RowStore;
  std::array<double, kEngineCount> runtimes{};
};

/// Geometric mean of chosen / best run time.
double routing_slowdown(std::span<const RoutingDecision> decisions);

} // namespace blueprintd
