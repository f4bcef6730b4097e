#include "blueprintd/selectivity.hpp"

#include "blueprintd/errors.hpp"

#include <algorithm>

namespace blueprintd {

double filter_selectivity(const FilterPredicate& p, const DatasetCatalog& cat) {
  cat.table(p.column.table); // UnknownTable
  const Histogram* h = cat.histogram(p.column.table, p.column.column);
  if (h == nullptr || p.op == CompareOp::VectorDistance) return kDefaultSelectivity;

  double sel = kDefaultSelectivity;
  if (const auto* v = std::get_if<double>(&p.literal)) {
    if (h->kind != Histogram::Kind::Numeric) return kDefaultSelectivity;
    switch (p.op) {
    case CompareOp::Lt:
    case CompareOp::Le:
      sel = h->fraction_below(*v);
      break;
    case CompareOp::Gt:
    case CompareOp::Ge:
      sel = 1.0 - h->fraction_below(*v);
      break;
    case CompareOp::Eq:
      sel = h->fraction_equal(*v);
      break;
    case CompareOp::NotEq:
      sel = 1.0 - h->fraction_equal(*v);
      break;
    case CompareOp::VectorDistance:
      break;
    }
  } else {
    // Strings only support (in)equality through the hashed buckets.
    const auto& s = std::get<std::string>(p.literal);
    if (h->kind != Histogram::Kind::Categorical) return kDefaultSelectivity;
    if (p.op == CompareOp::Eq) {
      sel = h->fraction_equal(s);
    } else if (p.op == CompareOp::NotEq) {
      sel = 1.0 - h->fraction_equal(s);
    }
  }
  return std::clamp(sel, 0.0, 1.0);
}

double join_selectivity(const JoinPredicate& p, const DatasetCatalog& cat) {
  cat.table(p.left.table);
  cat.table(p.right.table);
  const Histogram* l = cat.histogram(p.left.table, p.left.column);
  const Histogram* r = cat.histogram(p.right.table, p.right.column);
  if (l == nullptr || r == nullptr) return kDefaultSelectivity;
  const double d = std::max({l->distinct, r->distinct, 1.0});
  return std::clamp(1.0 / d, 0.0, 1.0);
}

SelectivityEstimate estimate_selectivity(const LogicalQuery& q, const DatasetCatalog& cat) {
  SelectivityEstimate est;
  for (const auto& t : q.tables) {
    cat.table(t);
    est.scan[t] = 1.0;
  }
  for (const auto& f : q.filter_predicates) est.scan[f.column.table] *= filter_selectivity(f, cat);
  for (const auto& j : q.join_predicates) est.join.push_back(join_selectivity(j, cat));
  for (const auto& [t, s] : est.scan) est.combined *= s;
  for (double s : est.join) est.combined *= s;
  est.combined = std::clamp(est.combined, 0.0, 1.0);
  return est;
}

std::vector<double> scan_cardinalities(const LogicalQuery& q, const DatasetCatalog& cat) {
  const auto est = estimate_selectivity(q, cat);
  std::vector<double> out;
  out.reserve(q.tables.size());
  for (const auto& t : q.tables) out.push_back(cat.table(t).row_count * est.scan.at(t));
  return out;
}

} // namespace blueprintd
