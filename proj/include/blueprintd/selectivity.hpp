#pragma once

#include "blueprintd/catalog.hpp"
#include "blueprintd/query.hpp"

#include <map>
#include <string>
#include <vector>

namespace blueprintd {

/// Used when a filtered or joined column has no histogram.
inline constexpr double kDefaultSelectivity = 0.1;

double filter_selectivity(const FilterPredicate& p, const DatasetCatalog& cat);
double join_selectivity(const JoinPredicate& p, const DatasetCatalog& cat);

/// Selinger-style estimates for each operation node of the feature graph.
struct SelectivityEstimate {
  std::map<std::string, double> scan; // table -> product of its filter conjuncts
  std::vector<double> join;           // per join predicate, in query order
  double combined = 1.0;              // product of everything above
};

SelectivityEstimate estimate_selectivity(const LogicalQuery& q, const DatasetCatalog& cat);

/// Estimated rows surviving each table's filters, in q.tables order.
std::vector<double> scan_cardinalities(const LogicalQuery& q, const DatasetCatalog& cat);

} // namespace blueprintd
