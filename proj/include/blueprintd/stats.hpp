#pragma once

#include <span>

namespace blueprintd {

/// Nearest-rank weighted percentile: the smallest sample whose cumulative
/// weight reaches p of the total. Zero-weight samples are ignored. Throws
/// EmptySamples when no sample carries weight.
double percentile(std::span<const double> samples, std::span<const double> weights, double p);

/// Unweighted variant.
double percentile(std::span<const double> samples, double p);

/// Geometric mean of positive values; 1.0 for an empty input.
double geometric_mean(std::span<const double> values);

} // namespace blueprintd
