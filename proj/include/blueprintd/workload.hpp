#pragma once

#include "blueprintd/query.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace blueprintd {

struct WorkloadQuery {
  std::string query_id;
  std::string sql;
  LogicalQuery query;
  double arrival_rate_per_hour = 0.0;
  std::string tag; // SLO class; empty means the default class
};

/// Representative queries of one planning window with their frequencies.
struct WorkloadWindow {
  std::vector<WorkloadQuery> queries;
  double txn_rate_per_s = 0.0;
  double window_hours = 1.0;

  std::size_t size() const noexcept { return queries.size(); }
};

/// Parses sql, fills query_id from the content hash when empty.
WorkloadQuery make_workload_query(std::string sql, double arrival_rate_per_hour,
                                  std::string query_id = {}, std::string tag = {},
                                  std::span<const std::string> capability_keywords =
                                      default_capability_keywords());

/// JSON Lines: one {query_id, sql, arrival_rate_per_hour} record per line.
std::vector<WorkloadQuery> load_workload_jsonl(
    const std::filesystem::path& path,
    std::span<const std::string> capability_keywords = default_capability_keywords());
std::vector<WorkloadQuery> parse_workload_jsonl(
    const std::string& text,
    std::span<const std::string> capability_keywords = default_capability_keywords());
std::string to_workload_jsonl(const std::vector<WorkloadQuery>& queries);

} // namespace blueprintd
