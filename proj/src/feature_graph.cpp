#include "blueprintd/feature_graph.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/selectivity.hpp"

#include <cmath>
#include <functional>

namespace blueprintd {

namespace {

double log_scale(double v) { return std::log10(v + 1.0); }

std::array<double, kNodeFeatureWidth> missing() {
  std::array<double, kNodeFeatureWidth> f;
  f.fill(kMissingFeature);
  return f;
}

double op_code(CompareOp op) { return static_cast<double>(static_cast<int>(op)); }

} // namespace

std::size_t FeatureGraph::count(NodeType t) const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.type == t ? 1 : 0;
  return n;
}

std::size_t FeatureGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.parents.size();
  return n;
}

bool FeatureGraph::is_acyclic() const {
  // 0 = unvisited, 1 = on stack, 2 = done
  std::vector<int> state(nodes.size(), 0);
  std::function<bool(std::size_t)> visit = [&](std::size_t i) {
    if (state[i] == 1) return false;
    if (state[i] == 2) return true;
    state[i] = 1;
    for (auto p : nodes[i].parents) {
      if (!visit(p)) return false;
    }
    state[i] = 2;
    return true;
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!visit(i)) return false;
  }
  return true;
}

bool FeatureGraph::all_reach_embedding() const {
  if (nodes.empty() || embedding >= nodes.size()) return false;
  // Walk edges backwards from the embedding node.
  std::vector<std::vector<std::size_t>> children(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (auto p : nodes[i].parents) children[p].push_back(i);
  }
  std::vector<bool> seen(nodes.size(), false);
  std::vector<std::size_t> stack{embedding};
  seen[embedding] = true;
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    for (auto c : children[n]) {
      if (!seen[c]) {
        seen[c] = true;
        stack.push_back(c);
      }
    }
  }
  for (bool s : seen) {
    if (!s) return false;
  }
  return true;
}

FeatureGraph build_feature_graph(const LogicalQuery& q, const DatasetCatalog& cat) {
  for (const auto& t : q.tables) cat.table(t);
  const SelectivityEstimate sel = estimate_selectivity(q, cat);

  FeatureGraph g;
  auto add = [&](NodeType type, std::string label, std::array<double, kNodeFeatureWidth> f) {
    g.nodes.push_back({type, std::move(label), f, {}});
    return g.nodes.size() - 1;
  };
  auto link = [&](std::size_t child, std::size_t parent) { g.nodes[child].parents.push_back(parent); };

  // Step 1: tables and their referenced columns.
  std::map<std::string, std::size_t> table_node;
  std::map<ColumnRef, std::size_t> column_node;
  for (const auto& t : q.tables) {
    const auto& stats = cat.table(t);
    auto it = q.columns.find(t);
    const double ncols = it == q.columns.end() ? 0.0 : static_cast<double>(it->second.size());
    auto f = missing();
    f[0] = log_scale(stats.row_count);
    f[1] = log_scale(stats.bytes);
    f[2] = ncols;
    table_node[t] = add(NodeType::Table, t, f);
  }
  for (const auto& [t, cols] : q.columns) {
    for (const auto& c : cols) {
      auto f = missing();
      if (const Histogram* h = cat.histogram(t, c)) {
        f[0] = 1.0;
        f[1] = log_scale(h->distinct);
        f[2] = h->kind == Histogram::Kind::Categorical ? 1.0 : 0.0;
      }
      const auto node = add(NodeType::Column, t + "." + c, f);
      column_node[{t, c}] = node;
      link(table_node.at(t), node);
    }
  }

  // Step 2: single-table operations. One scan per table fed by its filter
  // predicates and columns.
  std::map<std::string, std::size_t> scan_node;
  for (const auto& t : q.tables) {
    const auto& stats = cat.table(t);
    auto f = missing();
    f[0] = static_cast<double>(OperationKind::Scan);
    f[1] = sel.scan.at(t);
    f[2] = log_scale(stats.row_count * sel.scan.at(t));
    scan_node[t] = add(NodeType::Operation, "scan(" + t + ")", f);
    link(table_node.at(t), scan_node[t]);
  }
  for (const auto& [ref, node] : column_node) link(node, scan_node.at(ref.table));
  for (const auto& p : q.filter_predicates) {
    auto f = missing();
    f[0] = op_code(p.op);
    const Histogram* h = cat.histogram(p.column.table, p.column.column);
    if (const auto* v = std::get_if<double>(&p.literal); v && h && h->kind == Histogram::Kind::Numeric) {
      f[1] = (*v - h->min()) / (h->max() - h->min());
    }
    f[2] = filter_selectivity(p, cat);
    f[3] = 0.0;
    const auto node = add(NodeType::Predicate, p.column.qualified() + std::string(to_string(p.op)), f);
    link(column_node.at(p.column), node);
    link(node, scan_node.at(p.column.table));
  }

  // Step 3: joins take both scans and the join predicate as children.
  std::vector<std::size_t> op_nodes;
  for (const auto& [t, n] : scan_node) op_nodes.push_back(n);
  for (std::size_t i = 0; i < q.join_predicates.size(); ++i) {
    const auto& j = q.join_predicates[i];
    auto pf = missing();
    pf[0] = static_cast<double>(static_cast<int>(CompareOp::Eq));
    pf[2] = sel.join[i];
    pf[3] = 1.0;
    const auto pred = add(NodeType::Predicate, j.left.qualified() + "=" + j.right.qualified(), pf);
    link(column_node.at(j.left), pred);
    link(column_node.at(j.right), pred);

    auto of = missing();
    of[0] = static_cast<double>(OperationKind::Join);
    of[1] = sel.join[i];
    of[2] = log_scale(cat.table(j.left.table).row_count * sel.scan.at(j.left.table) *
                      cat.table(j.right.table).row_count * sel.scan.at(j.right.table) * sel.join[i]);
    const auto join = add(NodeType::Operation, "join", of);
    link(pred, join);
    link(scan_node.at(j.left.table), join);
    link(scan_node.at(j.right.table), join);
    op_nodes.push_back(join);
  }

  // Aggregation without a predicate hangs off the columns it reads.
  if (q.has_aggregation()) {
    auto f = missing();
    f[0] = static_cast<double>(q.group_by.empty() ? OperationKind::Aggregate : OperationKind::GroupBy);
    f[3] = static_cast<double>(q.aggregates.size());
    const auto agg = add(NodeType::Operation, q.group_by.empty() ? "aggregate" : "group_by", f);
    for (const auto& a : q.aggregates) {
      if (a.column) link(column_node.at(*a.column), agg);
    }
    for (const auto& c : q.group_by) link(column_node.at(c), agg);
    op_nodes.push_back(agg);
  }

  // Step 4: every operation feeds the embedding node.
  auto ef = missing();
  ef[0] = static_cast<double>(q.tables.size());
  ef[1] = static_cast<double>(q.join_predicates.size());
  ef[2] = static_cast<double>(q.filter_predicates.size());
  g.embedding = add(NodeType::Embedding, "embedding", ef);
  for (auto op : op_nodes) link(op, g.embedding);
  return g;
}

} // namespace blueprintd
