#include "blueprintd/search.hpp"

#include "blueprintd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace blueprintd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kRow = engine_index(EngineId::RowStore);

bool rowstore_serving(const CandidateScorer::Prepared& prep) { return prep.serving[kRow]; }

nlohmann::json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return "inf";
}

} // namespace

ProvisioningLattice ProvisioningLattice::from_pricing(const PricingCatalog& pricing, int radius, int max_nodes) {
  ProvisioningLattice l;
  l.instance_types = pricing.instances;
  l.radius = radius;
  l.max_nodes = max_nodes;
  return l;
}

Provisioning ProvisioningLattice::at(EngineId e, std::size_t index, int nodes) const {
  const auto& t = instance_types[engine_index(e)].at(index);
  return {e, t.name, nodes, t.vcpus};
}

std::vector<Provisioning> engine_neighbors(const Provisioning& current, const ProvisioningLattice& lattice) {
  const EngineId e = current.engine;
  const auto& types = lattice.instance_types[engine_index(e)];
  std::optional<std::size_t> current_index;
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (types[i].name == current.instance_type) current_index = i;
  }
  if (e == EngineId::ScanService || !current_index) return {current};

  // Lattice points are (instance index, nodes).
  using Point = std::pair<std::size_t, int>;
  auto step = [&](Point p) {
    std::vector<Point> out;
    const auto [idx, nodes] = p;
    if (nodes == 0) {
      out.push_back({0, lattice.min_nodes});
      out.push_back({idx, lattice.min_nodes});
      return out;
    }
    if (idx > 0) out.push_back({idx - 1, nodes});
    if (idx + 1 < types.size()) out.push_back({idx + 1, nodes});
    out.push_back({idx, nodes / 2 >= lattice.min_nodes ? nodes / 2 : 0});
    if (nodes * 2 <= lattice.max_nodes) out.push_back({idx, nodes * 2});
    out.push_back({idx, 0});
    return out;
  };

  std::set<Point> seen{{*current_index, current.node_count}};
  std::vector<Point> frontier{{*current_index, current.node_count}};
  for (int r = 0; r < lattice.radius; ++r) {
    std::vector<Point> next;
    for (const auto& p : frontier) {
      for (const auto& n : step(p)) {
        if (seen.insert(n).second) next.push_back(n);
      }
    }
    frontier = std::move(next);
  }
  std::vector<Provisioning> out;
  for (const auto& [idx, nodes] : seen) {
    if (idx == *current_index && nodes == current.node_count) {
      out.push_back(current);
    } else {
      out.push_back(lattice.at(e, idx, nodes));
    }
  }
  return out;
}

std::vector<ProvisioningSet> enumerate_neighbor_provisionings(const ProvisioningSet& current,
                                                              const ProvisioningLattice& lattice) {
  std::array<std::vector<Provisioning>, kEngineCount> options;
  for (auto e : kAllEngines) options[engine_index(e)] = engine_neighbors(current[engine_index(e)], lattice);
  std::vector<ProvisioningSet> out;
  for (const auto& r : options[0]) {
    for (const auto& w : options[1]) {
      for (const auto& s : options[2]) out.push_back({r, w, s});
    }
  }
  return out;
}

std::vector<std::size_t> order_queries(const WorkloadWindow& w, std::span<const QueryPrediction> predictions) {
  std::vector<std::size_t> order(w.queries.size());
  std::vector<double> speedup(w.queries.size(), 1.0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
    const auto& rt = predictions[i].runtime_s;
    const double lo = *std::min_element(rt.begin(), rt.end());
    const double hi = *std::max_element(rt.begin(), rt.end());
    speedup[i] = lo > 0.0 ? hi / lo : kInf;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& qa = w.queries[a];
    const auto& qb = w.queries[b];
    if (qa.arrival_rate_per_hour != qb.arrival_rate_per_hour) return qa.arrival_rate_per_hour > qb.arrival_rate_per_hour;
    if (speedup[a] != speedup[b]) return speedup[a] > speedup[b];
    return qa.query_id < qb.query_id;
  });
  return order;
}

std::optional<SearchResult> beam_search(const CandidateScorer& scorer, const ProvisioningSet& provisionings,
                                        const Objective& obj, std::size_t beam_width,
                                        std::span<const std::size_t> order) {
  if (beam_width < 1) throw ConfigError("beam width must be at least 1");
  const auto prep = scorer.prepare(provisionings);
  if (!rowstore_serving(prep)) return std::nullopt;

  struct Entry {
    std::vector<std::int8_t> assignment;
    RankKey key;
  };
  const std::size_t n = scorer.query_count();
  std::vector<Entry> beam{{std::vector<std::int8_t>(n, -1), {}}};
  std::vector<Entry> children;
  VectorScore scratch;
  std::size_t scored = 0;

  for (auto q : order) {
    children.clear();
    for (const auto& entry : beam) {
      for (std::size_t e = 0; e < kEngineCount; ++e) {
        if (!((prep.eligible[q] >> e) & 1u)) continue;
        Entry child{entry.assignment, {}};
        child.assignment[q] = static_cast<std::int8_t>(e);
        scorer.score(prep, child.assignment, scratch);
        ++scored;
        child.key = rank_key(scratch, obj.metrics, obj.slo);
        children.push_back(std::move(child));
      }
    }
    if (children.empty()) return std::nullopt;
    const auto keep = std::min(beam_width, children.size());
    std::partial_sort(children.begin(), children.begin() + static_cast<std::ptrdiff_t>(keep), children.end(),
                      [](const Entry& a, const Entry& b) { return a.key < b.key; });
    children.resize(keep);
    std::swap(beam, children);
  }

  SearchResult result;
  result.candidate.provisionings = provisionings;
  result.candidate.assignment = beam.front().assignment;
  scorer.score(prep, result.candidate.assignment, result.score);
  result.w = beam.front().key.w;
  result.candidates_scored = scored;
  return result;
}

namespace {

/// Tracks the best candidate seen across a sweep.
class BestTracker {
public:
  explicit BestTracker(const Objective& obj) : obj_(obj) {}

  void offer(const ProvisioningSet& prov, std::span<const std::int8_t> assignment, const VectorScore& score) {
    ++scored_;
    const auto key = rank_key(score, obj_.metrics, obj_.slo);
    if (!found_ || key < best_key_) {
      found_ = true;
      best_key_ = key;
      best_.candidate.provisionings = prov;
      best_.candidate.assignment.assign(assignment.begin(), assignment.end());
      best_.score = score;
      best_.w = key.w;
    }
  }

  SearchResult result() {
    if (!found_) throw NoFeasibleBlueprint("no valid candidate: RowStore is not serving in any provisioning");
    best_.candidates_scored = scored_;
    return best_;
  }

private:
  const Objective& obj_;
  bool found_ = false;
  RankKey best_key_{};
  SearchResult best_;
  std::size_t scored_ = 0;
};

} // namespace

SearchResult exhaustive_search(const CandidateScorer& scorer, std::span<const ProvisioningSet> provisionings,
                               const Objective& obj) {
  const std::size_t n = scorer.query_count();
  const double space = std::pow(3.0, static_cast<double>(n)) * static_cast<double>(provisionings.size());
  if (space > kExhaustiveLimit) {
    throw SearchSpaceTooLarge("exhaustive search over " + std::to_string(space) + " candidates exceeds the limit");
  }
  BestTracker best(obj);
  VectorScore scratch;
  for (const auto& prov : provisionings) {
    const auto prep = scorer.prepare(prov);
    if (!rowstore_serving(prep)) continue;
    std::vector<std::vector<std::int8_t>> options(n);
    bool routable = true;
    for (std::size_t q = 0; q < n; ++q) {
      for (std::size_t e = 0; e < kEngineCount; ++e) {
        if ((prep.eligible[q] >> e) & 1u) options[q].push_back(static_cast<std::int8_t>(e));
      }
      routable = routable && !options[q].empty();
    }
    if (!routable) continue;
    // Odometer over per-query options.
    std::vector<std::size_t> digit(n, 0);
    std::vector<std::int8_t> assignment(n);
    for (std::size_t q = 0; q < n; ++q) assignment[q] = options[q][0];
    while (true) {
      scorer.score(prep, assignment, scratch);
      best.offer(prov, assignment, scratch);
      std::size_t q = 0;
      for (; q < n; ++q) {
        if (++digit[q] < options[q].size()) {
          assignment[q] = options[q][digit[q]];
          break;
        }
        digit[q] = 0;
        assignment[q] = options[q][0];
      }
      if (q == n) break;
    }
  }
  return best.result();
}

SearchResult naive_greedy(const CandidateScorer& scorer, std::span<const ProvisioningSet> provisionings,
                          const Objective& obj) {
  BestTracker best(obj);
  VectorScore scratch;
  const auto predictions = scorer.predictions();
  for (const auto& prov : provisionings) {
    const auto prep = scorer.prepare(prov);
    if (!rowstore_serving(prep)) continue;
    std::vector<std::int8_t> assignment(scorer.query_count(), -1);
    bool routable = true;
    for (std::size_t q = 0; q < assignment.size(); ++q) {
      double best_rt = kInf;
      for (std::size_t e = 0; e < kEngineCount; ++e) {
        if (!((prep.eligible[q] >> e) & 1u)) continue;
        const double rt = predictions[q].runtime_s[e] * prep.runtime_factor[e];
        if (rt < best_rt) {
          best_rt = rt;
          assignment[q] = static_cast<std::int8_t>(e);
        }
      }
      routable = routable && assignment[q] >= 0;
    }
    if (!routable) continue;
    scorer.score(prep, assignment, scratch);
    best.offer(prov, assignment, scratch);
  }
  return best.result();
}

SearchResult random_search(const CandidateScorer& scorer, std::span<const ProvisioningSet> provisionings,
                           const Objective& obj, std::size_t samples, std::uint64_t seed) {
  BestTracker best(obj);
  VectorScore scratch;
  std::mt19937_64 rng(seed);
  for (const auto& prov : provisionings) {
    const auto prep = scorer.prepare(prov);
    if (!rowstore_serving(prep)) continue;
    const std::size_t n = scorer.query_count();
    std::vector<std::vector<std::int8_t>> options(n);
    bool routable = true;
    for (std::size_t q = 0; q < n; ++q) {
      for (std::size_t e = 0; e < kEngineCount; ++e) {
        if ((prep.eligible[q] >> e) & 1u) options[q].push_back(static_cast<std::int8_t>(e));
      }
      routable = routable && !options[q].empty();
    }
    if (!routable) continue;
    std::vector<std::int8_t> assignment(n);
    for (std::size_t s = 0; s < samples; ++s) {
      for (std::size_t q = 0; q < n; ++q) {
        std::uniform_int_distribution<std::size_t> pick(0, options[q].size() - 1);
        assignment[q] = options[q][pick(rng)];
      }
      scorer.score(prep, assignment, scratch);
      best.offer(prov, assignment, scratch);
    }
  }
  return best.result();
}

nlohmann::json PlanResult::to_json() const {
  return {{"blueprint", blueprint.to_json()},
          {"blueprint_hash", blueprint.hash()},
          {"w", finite_or_string(w)},
          {"current_w", finite_or_string(current_w)},
          {"kept_current", kept_current},
          {"score", score.to_json()},
          {"provisionings_considered", provisionings_considered},
          {"candidates_scored", candidates_scored}};
}

PlanResult plan(const CandidateScorer& scorer, const Blueprint& current, const Objective& obj,
                const PlanConfig& cfg) {
  const auto lattice = ProvisioningLattice::from_pricing(scorer.inputs().pricing, cfg.radius, cfg.max_nodes);
  const auto provisionings = enumerate_neighbor_provisionings(scorer.current_provisionings(), lattice);
  const auto order = order_queries(scorer.workload(), scorer.predictions());

  PlanResult out;
  out.provisionings_considered = provisionings.size();
  std::optional<SearchResult> best;
  RankKey best_key{};
  for (const auto& prov : provisionings) {
    auto r = beam_search(scorer, prov, obj, cfg.beam_width, order);
    if (!r) continue;
    out.candidates_scored += r->candidates_scored;
    const auto key = r->key(obj);
    if (!best || key < best_key) {
      best_key = key;
      best = std::move(r);
    }
  }

  // The current blueprint competes as-is when it routes every query.
  const auto current_candidate = scorer.candidate_from(current);
  const bool complete = std::all_of(current_candidate.assignment.begin(), current_candidate.assignment.end(),
                                    [](std::int8_t a) { return a >= 0; });
  out.current_w = kInf;
  if (complete && current.serving(EngineId::RowStore)) {
    auto score = scorer.score_with_placement(current_candidate, scorer.placement_masks(current));
    score.blueprint_hash = current.hash();
    const auto key = rank_key(score, obj.metrics, obj.slo);
    out.current_w = key.w;
    const bool current_wins =
        !best || std::tie(key.w, key.transition_time_s, key.operating_cost) <=
                     std::tie(best_key.w, best_key.transition_time_s, best_key.operating_cost);
    if (current_wins && std::isfinite(key.w)) {
      out.blueprint = current;
      out.score = std::move(score);
      out.w = key.w;
      out.kept_current = true;
      return out;
    }
  }
  if (!best || !std::isfinite(best_key.w)) {
    throw NoFeasibleBlueprint("no candidate blueprint satisfies the SLOs; relax the constraints");
  }
  out.blueprint = scorer.materialize(best->candidate);
  out.score = std::move(best->score);
  out.score.blueprint_hash = out.blueprint.hash();
  out.w = best_key.w;
  return out;
}

} // namespace blueprintd
