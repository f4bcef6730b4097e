#include "blueprintd/workload.hpp"

#include "blueprintd/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace blueprintd {

WorkloadQuery make_workload_query(std::string sql, double arrival_rate_per_hour,
                                  std::string query_id, std::string tag,
                                  std::span<const std::string> capability_keywords) {
  if (arrival_rate_per_hour < 0.0) throw ConfigError("arrival rate must be nonnegative");
  WorkloadQuery wq;
  wq.query = parse_query(sql, capability_keywords);
  wq.query.arrival_rate = arrival_rate_per_hour;
  wq.query_id = query_id.empty() ? query_id_for(sql) : std::move(query_id);
  wq.sql = std::move(sql);
  wq.arrival_rate_per_hour = arrival_rate_per_hour;
  wq.tag = std::move(tag);
  return wq;
}

std::vector<WorkloadQuery> parse_workload_jsonl(const std::string& text,
                                                std::span<const std::string> capability_keywords) {
  std::vector<WorkloadQuery> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back(make_workload_query(j.at("sql").get<std::string>(),
                                        j.at("arrival_rate_per_hour").get<double>(),
                                        j.value("query_id", std::string{}),
                                        j.value("tag", std::string{}), capability_keywords));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("workload line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<WorkloadQuery> load_workload_jsonl(const std::filesystem::path& path,
                                               std::span<const std::string> capability_keywords) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open workload file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_workload_jsonl(buf.str(), capability_keywords);
}

std::string to_workload_jsonl(const std::vector<WorkloadQuery>& queries) {
  std::string out;
  for (const auto& q : queries) {
    nlohmann::json j{{"query_id", q.query_id},
                     {"sql", q.sql},
                     {"arrival_rate_per_hour", q.arrival_rate_per_hour}};
    if (!q.tag.empty()) j["tag"] = q.tag;
    out += j.dump() + "\n";
  }
  return out;
}

} // namespace blueprintd
