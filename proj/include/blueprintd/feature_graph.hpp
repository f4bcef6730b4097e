#pragma once

#include "blueprintd/catalog.hpp"
#include "blueprintd/query.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace blueprintd {

enum class NodeType { Table, Column, Predicate, Operation, Embedding };
enum class OperationKind { Scan = 0, Join = 1, Aggregate = 2, GroupBy = 3 };

/// Every node carries this many feature slots; unavailable slots hold -1.
inline constexpr std::size_t kNodeFeatureWidth = 4;
inline constexpr double kMissingFeature = -1.0;

struct FeatureNode {
  NodeType type = NodeType::Embedding;
  std::string label;
  std::array<double, kNodeFeatureWidth> features{};
  std::vector<std::size_t> parents; // edges point from child to parent
};

/// Logical feature graph of a query. Information flows child -> parent and
/// ends at the single embedding node.
struct FeatureGraph {
  std::vector<FeatureNode> nodes;
  std::size_t embedding = 0;

  std::size_t count(NodeType t) const;
  std::size_t edge_count() const;
  bool is_acyclic() const;
  /// True when every node has a directed path to the embedding node.
  bool all_reach_embedding() const;
};

/// Throws UnknownTable when a referenced table is missing from the catalog.
FeatureGraph build_feature_graph(const LogicalQuery& q, const DatasetCatalog& cat);

} // namespace blueprintd
