#pragma once

#include "blueprintd/catalog.hpp"
#include "blueprintd/engine.hpp"
#include "blueprintd/workload.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blueprintd {

/// Unloaded run times at each engine's base provisioning, and bytes scanned.
class GroundTruthSource {
public:
  virtual ~GroundTruthSource() = default;
  virtual double runtime_s(const LogicalQuery& q, EngineId e) const = 0;
  virtual double bytes_scanned(const LogicalQuery& q) const = 0;
};

enum class PredictorKind { Oracle, NoisyOracle, Table };

std::string_view to_string(PredictorKind k) noexcept;

class RuntimePredictor {
public:
  virtual ~RuntimePredictor() = default;
  virtual PredictorKind kind() const noexcept = 0;
  /// Seconds at the engine's base provisioning; always positive.
  virtual double predict_runtime(const WorkloadQuery& q, EngineId e) const = 0;
  virtual double predict_bytes_scanned(const WorkloadQuery& q) const = 0;
};

class OraclePredictor final : public RuntimePredictor {
public:
  explicit OraclePredictor(std::shared_ptr<const GroundTruthSource> truth);
  PredictorKind kind() const noexcept override { return PredictorKind::Oracle; }
  double predict_runtime(const WorkloadQuery& q, EngineId e) const override;
  double predict_bytes_scanned(const WorkloadQuery& q) const override;

private:
  std::shared_ptr<const GroundTruthSource> truth_;
};

struct NoiseConfig {
  double fraction = 0.0; // share of (query, engine) pairs perturbed, in [0, 1]
  double error = 0.0;    // multiplicative error, > -1
  std::uint64_t seed = 0;
};

/// Ground truth times (1 + error) on a seeded subset of (query, engine)
/// pairs. Bytes scanned use the pseudo-engine key "bytes".
class NoisyOraclePredictor final : public RuntimePredictor {
public:
  NoisyOraclePredictor(std::shared_ptr<const GroundTruthSource> truth, NoiseConfig noise);
  PredictorKind kind() const noexcept override { return PredictorKind::NoisyOracle; }
  double predict_runtime(const WorkloadQuery& q, EngineId e) const override;
  double predict_bytes_scanned(const WorkloadQuery& q) const override;

  bool perturbed(std::string_view query_id, std::string_view key) const;

private:
  std::shared_ptr<const GroundTruthSource> truth_;
  NoiseConfig noise_;
};

struct CalibrationRow {
  std::string query_id;
  EngineId engine = EngineId::RowStore;
  double runtime_s = 0.0;
  double bytes_scanned = 0.0;
};

/// Columns query_id, engine, runtime_s, bytes_scanned with a header row.
std::vector<CalibrationRow> parse_calibration_csv(std::string_view text);
std::vector<CalibrationRow> load_calibration_csv(const std::filesystem::path& path);

/// Aggregate features for nearest-neighbour lookup.
struct QueryFeatures {
  double table_count = 0.0;
  double join_count = 0.0;
  double log_rows = 0.0; // sum of ln(1 + rows) over referenced tables
  double selectivity = 1.0;

  double distance(const QueryFeatures& o) const;
};

QueryFeatures query_features(const LogicalQuery& q, const DatasetCatalog& catalog);

/// Calibration lookup by query_id; unseen queries take the values of the
/// nearest calibrated query in feature space.
class TablePredictor final : public RuntimePredictor {
public:
  /// `known` supplies the parsed queries behind calibrated ids so their
  /// features can serve as neighbours. Throws NoCalibration when empty.
  TablePredictor(std::span<const CalibrationRow> rows, const DatasetCatalog& catalog,
                 std::span<const WorkloadQuery> known);

  PredictorKind kind() const noexcept override { return PredictorKind::Table; }
  double predict_runtime(const WorkloadQuery& q, EngineId e) const override;
  double predict_bytes_scanned(const WorkloadQuery& q) const override;

private:
  struct Entry {
    std::array<double, kEngineCount> runtime{};
    std::array<bool, kEngineCount> has{};
    double bytes = 0.0;
    bool has_features = false;
    QueryFeatures features;
  };
  const Entry& lookup(const WorkloadQuery& q, std::optional<EngineId> e) const;

  std::map<std::string, Entry> entries_;
  DatasetCatalog catalog_;
};

/// Predicted unloaded run time per engine and bytes scanned for each query.
struct QueryPrediction {
  std::array<double, kEngineCount> runtime_s{};
  double bytes_scanned = 0.0;
};

std::vector<QueryPrediction> predict_all(const RuntimePredictor& predictor,
                                         std::span<const WorkloadQuery> queries);

/// max(p/a, a/p). Throws NonPositiveInput.
double q_error(double predicted, double actual);

} // namespace blueprintd
