#pragma once

#include <json.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blueprintd {

inline constexpr std::size_t kHistogramBuckets = 64;

/// Per-column statistics. Numeric columns use equi-width buckets over
/// [boundaries.front(), boundaries.back()]; string columns hash each value
/// into one of the buckets and compare by bucket.
struct Histogram {
  enum class Kind { Numeric, Categorical };

  Kind kind = Kind::Numeric;
  std::vector<double> boundaries; // counts.size() + 1 entries, strictly increasing
  std::vector<double> counts;
  double distinct = 1.0;
  double row_count = 0.0;

  static Histogram uniform(double lo, double hi, double rows, double distinct,
                           std::size_t buckets = kHistogramBuckets);
  static Histogram from_values(std::span<const double> values,
                               std::size_t buckets = kHistogramBuckets);
  static Histogram from_strings(std::span<const std::string> values,
                                std::size_t buckets = kHistogramBuckets);

  double min() const { return boundaries.front(); }
  double max() const { return boundaries.back(); }

  /// Fraction of rows with value strictly below v, interpolating linearly
  /// inside the bucket containing v.
  double fraction_below(double v) const;
  /// Fraction of rows equal to v (uniform spread over the bucket's distinct
  /// values).
  double fraction_equal(double v) const;
  double fraction_equal(std::string_view v) const;

  /// Checks the invariants: counts sum to row_count, boundaries increasing.
  bool valid() const;

  static std::size_t string_bucket(std::string_view v, std::size_t buckets);
};

struct TableStats {
  std::string name;
  double row_count = 0.0;
  double bytes = 0.0; // physical size
  std::map<std::string, Histogram> columns;
};

class DatasetCatalog {
public:
  DatasetCatalog() = default;
  explicit DatasetCatalog(std::vector<TableStats> tables);

  const std::vector<TableStats>& tables() const noexcept { return tables_; }
  std::size_t size() const noexcept { return tables_.size(); }

  /// Throws UnknownTable.
  const TableStats& table(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name).has_value(); }

  const Histogram* histogram(std::string_view table, std::string_view column) const;

  double total_bytes() const;

  static DatasetCatalog from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

private:
  std::vector<TableStats> tables_;
};

} // namespace blueprintd
