#include "blueprintd/predictor.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/hash.hpp"
#include "blueprintd/selectivity.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace blueprintd {

std::string_view to_string(PredictorKind k) noexcept {
  switch (k) {
  case PredictorKind::Oracle:
    return "oracle";
  case PredictorKind::NoisyOracle:
    return "noisy_oracle";
  case PredictorKind::Table:
    return "table";
  }
  return "?";
}

OraclePredictor::OraclePredictor(std::shared_ptr<const GroundTruthSource> truth)
    : truth_(std::move(truth)) {
  if (!truth_) throw ConfigError("oracle predictor needs a ground truth source");
}

double OraclePredictor::predict_runtime(const WorkloadQuery& q, EngineId e) const {
  return truth_->runtime_s(q.query, e);
}

double OraclePredictor::predict_bytes_scanned(const WorkloadQuery& q) const {
  return truth_->bytes_scanned(q.query);
}

NoisyOraclePredictor::NoisyOraclePredictor(std::shared_ptr<const GroundTruthSource> truth,
                                           NoiseConfig noise)
    : truth_(std::move(truth)), noise_(noise) {
  if (!truth_) throw ConfigError("noisy oracle needs a ground truth source");
  if (!(noise_.fraction >= 0.0 && noise_.fraction <= 1.0)) {
    throw ConfigError("noise fraction must lie in [0, 1]");
  }
  if (!(noise_.error > -1.0)) throw ConfigError("noise error must exceed -1");
}

bool NoisyOraclePredictor::perturbed(std::string_view query_id, std::string_view key) const {
  std::uint64_t h = fnv1a(query_id, mix64(noise_.seed));
  h = fnv1a("|", h);
  h = fnv1a(key, h);
  return unit_interval(h) < noise_.fraction;
}

double NoisyOraclePredictor::predict_runtime(const WorkloadQuery& q, EngineId e) const {
  const double truth = truth_->runtime_s(q.query, e);
  return perturbed(q.query_id, to_string(e)) ? truth * (1.0 + noise_.error) : truth;
}

double NoisyOraclePredictor::predict_bytes_scanned(const WorkloadQuery& q) const {
  const double truth = truth_->bytes_scanned(q.query);
  return perturbed(q.query_id, "bytes") ? truth * (1.0 + noise_.error) : truth;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

} // namespace

std::vector<CalibrationRow> parse_calibration_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split_csv_line(line);
  auto column = [&](std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw ConfigError("calibration CSV lacks column " + std::string(name));
  };
  const auto c_id = column("query_id"), c_engine = column("engine"), c_rt = column("runtime_s"),
             c_bytes = column("bytes_scanned");
  std::vector<CalibrationRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < header.size()) {
      throw ConfigError("calibration CSV line " + std::to_string(line_no) + " is short");
    }
    try {
      CalibrationRow r{cells[c_id], engine_from_string(cells[c_engine]), std::stod(cells[c_rt]),
                       std::stod(cells[c_bytes])};
      if (!(r.runtime_s > 0.0) || r.bytes_scanned < 0.0) throw ConfigError("non-positive runtime");
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ConfigError("calibration CSV line " + std::to_string(line_no) + " is malformed");
    }
  }
  return rows;
}

std::vector<CalibrationRow> load_calibration_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open calibration file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_calibration_csv(buf.str());
}

double QueryFeatures::distance(const QueryFeatures& o) const {
  const double d0 = table_count - o.table_count;
  const double d1 = join_count - o.join_count;
  const double d2 = log_rows - o.log_rows;
  const double d3 = selectivity - o.selectivity;
  return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3);
}

QueryFeatures query_features(const LogicalQuery& q, const DatasetCatalog& catalog) {
  QueryFeatures f;
  f.table_count = static_cast<double>(q.tables.size());
  f.join_count = static_cast<double>(q.join_predicates.size());
  for (const auto& t : q.tables) f.log_rows += std::log1p(catalog.table(t).row_count);
  f.selectivity = estimate_selectivity(q, catalog).combined;
  return f;
}

TablePredictor::TablePredictor(std::span<const CalibrationRow> rows, const DatasetCatalog& catalog,
                               std::span<const WorkloadQuery> known)
    : catalog_(catalog) {
  if (rows.empty()) throw NoCalibration("table predictor has no calibration rows");
  for (const auto& r : rows) {
    auto& e = entries_[r.query_id];
    e.runtime[engine_index(r.engine)] = r.runtime_s;
    e.has[engine_index(r.engine)] = true;
    e.bytes = r.bytes_scanned;
  }
  for (const auto& q : known) {
    auto it = entries_.find(q.query_id);
    if (it == entries_.end()) continue;
    it->second.features = query_features(q.query, catalog_);
    it->second.has_features = true;
  }
}

const TablePredictor::Entry& TablePredictor::lookup(const WorkloadQuery& q,
                                                    std::optional<EngineId> e) const {
  auto covers = [&](const Entry& entry) { return !e || entry.has[engine_index(*e)]; };
  if (auto it = entries_.find(q.query_id); it != entries_.end() && covers(it->second)) {
    return it->second;
  }
  const auto target = query_features(q.query, catalog_);
  const Entry* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  // std::map iteration order makes ties resolve to the smallest id.
  for (const auto& [id, entry] : entries_) {
    if (!entry.has_features || !covers(entry)) continue;
    const double d = target.distance(entry.features);
    if (d < best_d) {
      best_d = d;
      best = &entry;
    }
  }
  if (best == nullptr) {
    throw NoCalibration("no calibrated neighbour for " + q.query_id);
  }
  return *best;
}

double TablePredictor::predict_runtime(const WorkloadQuery& q, EngineId e) const {
  return lookup(q, e).runtime[engine_index(e)];
}

double TablePredictor::predict_bytes_scanned(const WorkloadQuery& q) const {
  return lookup(q, std::nullopt).bytes;
}

std::vector<QueryPrediction> predict_all(const RuntimePredictor& predictor,
                                         std::span<const WorkloadQuery> queries) {
  std::vector<QueryPrediction> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    QueryPrediction p;
    for (auto e : kAllEngines) p.runtime_s[engine_index(e)] = predictor.predict_runtime(q, e);
    p.bytes_scanned = predictor.predict_bytes_scanned(q);
    out.push_back(p);
  }
  return out;
}

double q_error(double predicted, double actual) {
  if (!(predicted > 0.0) || !(actual > 0.0)) {
    throw NonPositiveInput("q_error needs positive arguments");
  }
  return std::max(predicted / actual, actual / predicted);
}

} // namespace blueprintd
