#pragma once

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace blueprintd {

struct ColumnRef {
  std::string table;
  std::string column;

  auto operator<=>(const ColumnRef&) const = default;
  std::string qualified() const { return table + "." + column; }
};

enum class CompareOp { Eq, NotEq, Lt, Le, Gt, Ge, VectorDistance };

std::string_view to_string(CompareOp op) noexcept;

using Literal = std::variant<double, std::string>;

struct FilterPredicate {
  ColumnRef column;
  CompareOp op = CompareOp::Eq;
  Literal literal;

  bool operator==(const FilterPredicate&) const = default;
};

struct JoinPredicate {
  ColumnRef left;
  ColumnRef right;

  bool operator==(const JoinPredicate&) const = default;
};

enum class AggregateFn { Count, Sum, Avg, Min, Max };

std::string_view to_string(AggregateFn fn) noexcept;

struct Aggregate {
  AggregateFn fn = AggregateFn::Count;
  std::optional<ColumnRef> column; // empty for COUNT(*)

  bool operator==(const Aggregate&) const = default;
};

/// Logical IR of one query in the supported SELECT subset.
struct LogicalQuery {
  std::vector<std::string> tables;
  /// table -> referenced columns, sorted and unique.
  std::map<std::string, std::vector<std::string>> columns;
  bool select_star = false;
  std::vector<ColumnRef> projections;
  std::vector<FilterPredicate> filter_predicates;
  std::vector<JoinPredicate> join_predicates;
  std::vector<Aggregate> aggregates;
  std::vector<ColumnRef> group_by;
  std::vector<std::string> capability_tokens;
  double arrival_rate = 0.0; // executions per hour

  bool operator==(const LogicalQuery&) const = default;

  std::size_t column_count() const;
  bool has_aggregation() const { return !aggregates.empty() || !group_by.empty(); }
};

/// Keywords detected by default when scanning raw query text.
std::span<const std::string> default_capability_keywords();

/// Parses SELECT <list> FROM <tables> [WHERE <conjuncts>] [GROUP BY <cols>].
/// Throws ParseError with the byte offset of the offending token.
LogicalQuery parse_query(std::string_view sql);
LogicalQuery parse_query(std::string_view sql,
                         std::span<const std::string> capability_keywords);

/// Canonical SQL text for a parsed query; parse_query(render_query(q)) == q.
std::string render_query(const LogicalQuery& q);

/// Collapses whitespace runs outside string literals and trims.
std::string normalize_sql(std::string_view sql);

/// Content hash of the normalized text; identical recurring queries share it.
std::string query_id_for(std::string_view sql);

} // namespace blueprintd
