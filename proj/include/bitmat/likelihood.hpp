#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "bitmat/observed_matrix.hpp"

namespace bitmat {

// logistic(m) = exp(m)/(1+exp(m)), branch on sign so neither tail overflows.
inline double logistic(double m) {
  if (m >= 0.0) {
    return 1.0 / (1.0 + std::exp(-m));
  }
  const double e = std::exp(m);
  return e / (1.0 + e);
}

// log(1 + exp(m)) without overflow for |m| up to ~700.
inline double log1p_exp(double m) {
  if (m > 0.0) return m + std::log1p(std::exp(-m));
  return std::log1p(std::exp(m));
}

// Bernoulli-variance statistics sigma^2_ij = p_ij (1 - p_ij) aggregated over
// the observed cells: per-row sums sigma^2_{i+}, per-column sums
// sigma^2_{+j}, and the grand total sigma^2_{++}. Per-cell values are kept in
// CSR order (one double per observed cell; a dense N x J matrix is never
// formed). Computed at fitted parameters these are the plug-in "hat"
// versions; the type is the same.
struct SigmaStats {
  std::vector<double> row;   // length N
  std::vector<double> col;   // length J
  double total = 0.0;
  std::vector<double> cell;  // length n_observed, CSR order

  double cell_at(std::int64_t csr_position) const { return cell[csr_position]; }
};

// Sum over observed cells of y*(theta_i - beta_j) - log(1 + exp(theta_i - beta_j)).
double log_likelihood(const ModelParams& params, const ObservedBinaryMatrix& data);

// Analytic score: d l/d theta_i = sum_{j in S_J(i)} (y_ij - p_ij),
// d l/d beta_j = sum_{i in S_N(j)} (p_ij - y_ij).
// (The beta sign follows from differentiating the log-likelihood; the
// theta and beta gradient totals cancel exactly.)
std::pair<std::vector<double>, std::vector<double>> gradient(
    const ModelParams& params, const ObservedBinaryMatrix& data);

SigmaStats sigma_stats(const ModelParams& params, const ObservedBinaryMatrix& data);

// P(Y_ij = 1) = logistic(theta_i - beta_j); defined for any cell, observed or
// not (predicting missing cells is the completion task).
double predict_probability(const ModelParams& params,
                           const ObservedBinaryMatrix& data, std::int64_t i,
                           std::int64_t j);

namespace detail {
void require_dims(const ModelParams& params, const ObservedBinaryMatrix& data);
}

}  // namespace bitmat
