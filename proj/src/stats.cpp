#include "blueprintd/stats.hpp"

#include "blueprintd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace blueprintd {

double percentile(std::span<const double> samples, std::span<const double> weights, double p) {
  if (samples.size() != weights.size()) throw ConfigError("percentile: samples and weights differ in length");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("percentile rank must lie in [0, 1]");
  thread_local std::vector<std::size_t> order;
  order.clear();
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (weights[i] > 0.0) {
      order.push_back(i);
      total += weights[i];
    }
  }
  if (order.empty()) throw EmptySamples("percentile of an empty sample");
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a] < samples[b] || (samples[a] == samples[b] && a < b);
  });
  const double target = p * total * (1.0 - 1e-12);
  double cumulative = 0.0;
  for (auto i : order) {
    cumulative += weights[i];
    if (cumulative >= target) return samples[i];
  }
  return samples[order.back()];
}

double percentile(std::span<const double> samples, double p) {
  std::vector<double> ones(samples.size(), 1.0);
  return percentile(samples, ones, p);
}

double geometric_mean(std::span<const double> values) {
  if (values.empty()) return 1.0;
  double log_sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw NonPositiveInput("geometric mean needs positive values");
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

} // namespace blueprintd
