#include "blueprintd/catalog.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/hash.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace blueprintd {

namespace {

std::vector<double> equi_width(double lo, double hi, std::size_t buckets) {
  std::vector<double> b(buckets + 1);
  const double width = (hi - lo) / static_cast<double>(buckets);
  for (std::size_t i = 0; i <= buckets; ++i) b[i] = lo + width * static_cast<double>(i);
  b.back() = hi;
  return b;
}

std::size_t bucket_of(const std::vector<double>& boundaries, double v) {
  auto it = std::upper_bound(boundaries.begin(), boundaries.end(), v);
  auto idx = static_cast<std::size_t>(std::distance(boundaries.begin(), it));
  if (idx == 0) return 0;
  return std::min(idx - 1, boundaries.size() - 2);
}

} // namespace

Histogram Histogram::uniform(double lo, double hi, double rows, double distinct,
                             std::size_t buckets) {
  if (!(hi > lo) || buckets == 0) throw ConfigError("histogram needs lo < hi and buckets > 0");
  Histogram h;
  h.boundaries = equi_width(lo, hi, buckets);
  h.counts.assign(buckets, rows / static_cast<double>(buckets));
  h.row_count = rows;
  h.distinct = std::max(1.0, distinct);
  return h;
}

Histogram Histogram::from_values(std::span<const double> values, std::size_t buckets) {
  if (values.empty()) throw ConfigError("histogram needs at least one value");
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi <= lo) hi = lo + 1.0;
  Histogram h;
  h.boundaries = equi_width(lo, hi, buckets);
  h.counts.assign(buckets, 0.0);
  for (double v : values) h.counts[bucket_of(h.boundaries, v)] += 1.0;
  h.row_count = static_cast<double>(values.size());
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  h.distinct = static_cast<double>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  return h;
}

Histogram Histogram::from_strings(std::span<const std::string> values, std::size_t buckets) {
  if (values.empty()) throw ConfigError("histogram needs at least one value");
  Histogram h;
  h.kind = Kind::Categorical;
  h.boundaries = equi_width(0.0, static_cast<double>(buckets), buckets);
  h.counts.assign(buckets, 0.0);
  std::unordered_set<std::string> seen;
  for (const auto& v : values) {
    h.counts[string_bucket(v, buckets)] += 1.0;
    seen.insert(v);
  }
  h.row_count = static_cast<double>(values.size());
  h.distinct = static_cast<double>(seen.size());
  return h;
}

std::size_t Histogram::string_bucket(std::string_view v, std::size_t buckets) {
  return static_cast<std::size_t>(mix64(fnv1a(v)) % buckets);
}

double Histogram::fraction_below(double v) const {
  if (row_count <= 0.0 || counts.empty()) return 0.0;
  if (v <= boundaries.front()) return 0.0;
  if (v >= boundaries.back()) return 1.0;
  const std::size_t i = bucket_of(boundaries, v);
  double below = 0.0;
  for (std::size_t j = 0; j < i; ++j) below += counts[j];
  const double lo = boundaries[i];
  const double hi = boundaries[i + 1];
  below += counts[i] * (v - lo) / (hi - lo);
  return std::clamp(below / row_count, 0.0, 1.0);
}

namespace {

double equal_fraction_in_bucket(const Histogram& h, std::size_t i) {
  const double bucket_frac = h.counts[i] / h.row_count;
  if (bucket_frac <= 0.0) return 0.0;
  const double distinct_in_bucket = std::max(1.0, h.distinct * bucket_frac);
  return std::clamp(bucket_frac / distinct_in_bucket, 0.0, 1.0);
}

} // namespace

double Histogram::fraction_equal(double v) const {
  if (row_count <= 0.0 || counts.empty()) return 0.0;
  if (v < boundaries.front() || v > boundaries.back()) return 0.0;
  return equal_fraction_in_bucket(*this, bucket_of(boundaries, v));
}

double Histogram::fraction_equal(std::string_view v) const {
  if (row_count <= 0.0 || counts.empty()) return 0.0;
  return equal_fraction_in_bucket(*this, string_bucket(v, counts.size()));
}

bool Histogram::valid() const {
  if (counts.empty() || boundaries.size() != counts.size() + 1) return false;
  for (std::size_t i = 1; i < boundaries.size(); ++i) {
    if (!(boundaries[i] > boundaries[i - 1])) return false;
  }
  double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  return std::abs(total - row_count) <= 1e-6 * std::max(1.0, row_count);
}

DatasetCatalog::DatasetCatalog(std::vector<TableStats> tables) : tables_(std::move(tables)) {
  for (const auto& t : tables_) {
    if (!(t.row_count > 0.0) || !(t.bytes > 0.0)) {
      throw ConfigError("table '" + t.name + "' needs positive row count and size");
    }
  }
}

const TableStats& DatasetCatalog::table(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw UnknownTable("unknown table '" + std::string(name) + "'");
  return tables_[*idx];
}

std::optional<std::size_t> DatasetCatalog::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    if (tables_[i].name == name) return i;
  }
  return std::nullopt;
}

const Histogram* DatasetCatalog::histogram(std::string_view table, std::string_view column) const {
  auto idx = index_of(table);
  if (!idx) return nullptr;
  const auto& cols = tables_[*idx].columns;
  auto it = cols.find(std::string(column));
  return it == cols.end() ? nullptr : &it->second;
}

double DatasetCatalog::total_bytes() const {
  double sum = 0.0;
  for (const auto& t : tables_) sum += t.bytes;
  return sum;
}

DatasetCatalog DatasetCatalog::from_json(const nlohmann::json& doc) {
  std::vector<TableStats> tables;
  try {
    for (const auto& jt : doc.at("tables")) {
      TableStats t;
      t.name = jt.at("name").get<std::string>();
      t.row_count = jt.at("row_count").get<double>();
      t.bytes = jt.at("bytes").get<double>();
      if (jt.contains("columns")) {
        for (const auto& [col, jh] : jt.at("columns").items()) {
          Histogram h;
          if (jh.contains("uniform")) {
            const auto& u = jh.at("uniform");
            h = Histogram::uniform(u.at(0).get<double>(), u.at(1).get<double>(), t.row_count,
                                   jh.value("distinct", t.row_count),
                                   jh.value("buckets", kHistogramBuckets));
          } else {
            h.kind = jh.value("kind", std::string("numeric")) == "categorical"
                         ? Histogram::Kind::Categorical
                         : Histogram::Kind::Numeric;
            h.boundaries = jh.at("boundaries").get<std::vector<double>>();
            h.counts = jh.at("counts").get<std::vector<double>>();
            h.distinct = jh.at("distinct").get<double>();
            h.row_count = jh.value("row_count", t.row_count);
          }
          if (!h.valid()) throw ConfigError("invalid histogram for " + t.name + "." + col);
          t.columns.emplace(col, std::move(h));
        }
      }
      tables.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("catalog: ") + e.what());
  }
  return DatasetCatalog(std::move(tables));
}

nlohmann::json DatasetCatalog::to_json() const {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : tables_) {
    nlohmann::json cols = nlohmann::json::object();
    for (const auto& [name, h] : t.columns) {
      cols[name] = {{"kind", h.kind == Histogram::Kind::Categorical ? "categorical" : "numeric"},
                    {"boundaries", h.boundaries},
                    {"counts", h.counts},
                    {"distinct", h.distinct},
                    {"row_count", h.row_count}};
    }
    tables.push_back({{"name", t.name}, {"row_count", t.row_count}, {"bytes", t.bytes},
                      {"columns", cols}});
  }
  return {{"tables", tables}};
}

} // namespace blueprintd
