#pragma once

#include <cstddef>
#include <span>

namespace bitmat {

// Standard normal CDF.
double normal_cdf(double z);

// Quantile of the standard normal, Wichura's AS241 (PPND16) rational
// approximation. Absolute accuracy far exceeds the 1e-9 the inference
// layer needs.
double normal_quantile(double p);

// Natural log of the upper tail P(Z > z). Uses erfc up to its underflow
// point and an asymptotic expansion beyond, so magnitudes like 1e-300000
// still come out finite.
double normal_log_sf(double z);

// Two-sided p-value for a z statistic, and its base-10 log (exact even when
// the p-value itself underflows to 0).
double two_sided_p(double z);
double two_sided_log10_p(double z);

// Sum in a fixed pairwise (tree) order. Deterministic for a given input
// vector no matter how many threads produced it, and more accurate than
// left-to-right accumulation on long inputs.
double pairwise_sum(std::span<const double> values);

// Sample variance (denominator n-1) with pairwise accumulation.
double sample_variance(std::span<const double> values);

}  // namespace bitmat
