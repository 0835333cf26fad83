#include "bitmat/likelihood.hpp"

#include <string>

#include "bitmat/errors.hpp"
#include "bitmat/stats.hpp"

namespace bitmat {

namespace detail {
void require_dims(const ModelParams& params, const ObservedBinaryMatrix& data) {
  if (params.n_rows() != data.n_rows() || params.n_cols() != data.n_cols()) {
    throw DimensionError(
        "parameter dimensions (" + std::to_string(params.n_rows()) + "," +
        std::to_string(params.n_cols()) + ") do not match data (" +
        std::to_string(data.n_rows()) + "," + std::to_string(data.n_cols()) + ")");
  }
}
}  // namespace detail

double log_likelihood(const ModelParams& params, const ObservedBinaryMatrix& data) {
  detail::require_dims(params, data);
  const auto row_ptr = data.row_ptr();
  const auto col = data.col_index();
  const auto y = data.values();
  // Per-row partials summed pairwise, so the total is independent of any
  // outer parallelism over rows.
  std::vector<double> row_part(data.n_rows());
  for (std::int64_t i = 0; i < data.n_rows(); ++i) {
    const double ti = params.theta[i];
    double s = 0.0;
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const double m = ti - params.beta[col[k]];
      s += static_cast<double>(y[k]) * m - log1p_exp(m);
    }
    row_part[i] = s;
  }
  return pairwise_sum(row_part);
}

std::pair<std::vector<double>, std::vector<double>> gradient(
    const ModelParams& params, const ObservedBinaryMatrix& data) {
  detail::require_dims(params, data);
  std::vector<double> g_theta(data.n_rows(), 0.0);
  std::vector<double> g_beta(data.n_cols(), 0.0);
  const auto row_ptr = data.row_ptr();
  const auto col = data.col_index();
  const auto y = data.values();
  for (std::int64_t i = 0; i < data.n_rows(); ++i) {
    const double ti = params.theta[i];
    double s = 0.0;
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const double resid = static_cast<double>(y[k]) - logistic(ti - params.beta[col[k]]);
      s += resid;
      g_beta[col[k]] -= resid;
    }
    g_theta[i] = s;
  }
  return {std::move(g_theta), std::move(g_beta)};
}

SigmaStats sigma_stats(const ModelParams& params, const ObservedBinaryMatrix& data) {
  detail::require_dims(params, data);
  SigmaStats s;
  s.row.assign(data.n_rows(), 0.0);
  s.col.assign(data.n_cols(), 0.0);
  s.cell.resize(data.n_observed());
  const auto row_ptr = data.row_ptr();
  const auto col = data.col_index();
  for (std::int64_t i = 0; i < data.n_rows(); ++i) {
    const double ti = params.theta[i];
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const double p = logistic(ti - params.beta[col[k]]);
      const double v = p * (1.0 - p);
      s.cell[k] = v;
      s.row[i] += v;
      s.col[col[k]] += v;
    }
  }
  s.total = pairwise_sum(s.row);
  return s;
}

double predict_probability(const ModelParams& params,
                           const ObservedBinaryMatrix& data, std::int64_t i,
                           std::int64_t j) {
  detail::require_dims(params, data);
  if (i < 0 || i >= data.n_rows() || j < 0 || j >= data.n_cols()) {
    throw DimensionError("cell index (" + std::to_string(i) + "," +
                         std::to_string(j) + ") out of range");
  }
  return logistic(params.theta[i] - params.beta[j]);
}

}  // namespace bitmat
