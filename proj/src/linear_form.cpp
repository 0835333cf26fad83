#include "bitmat/linear_form.hpp"

#include <cmath>
#include <string>

#include "bitmat/errors.hpp"

namespace bitmat {

LinearForm LinearForm::from_coefficients(std::vector<double> w_theta,
                                         std::vector<double> w_beta) {
  LinearForm g;
  g.w_theta = std::move(w_theta);
  g.w_beta = std::move(w_beta);
  return g;
}

LinearForm LinearForm::from_entry_weights(
    std::int64_t n_rows, std::int64_t n_cols,
    std::span<const std::tuple<std::int32_t, std::int32_t, double>> weights) {
  LinearForm g;
  g.has_origin = true;
  g.origin_row.assign(n_rows, 0.0);
  g.origin_col.assign(n_cols, 0.0);
  for (const auto& [i, j, w] : weights) {
    if (i < 0 || i >= n_rows || j < 0 || j >= n_cols) {
      throw DimensionError("entry weight at (" + std::to_string(i) + "," +
                           std::to_string(j) + ") out of range");
    }
    g.origin_row[i] += w;
    g.origin_col[j] += w;
    g.origin_total += w;
  }
  g.w_theta = g.origin_row;
  g.w_beta.resize(n_cols);
  for (std::int64_t j = 0; j < n_cols; ++j) g.w_beta[j] = -g.origin_col[j];
  return g;
}

LinearForm LinearForm::row_coefficient(std::int64_t i, std::int64_t n_rows,
                                       std::int64_t n_cols) {
  if (i < 0 || i >= n_rows) throw DimensionError("row index out of range");
  LinearForm g;
  g.w_theta.assign(n_rows, 0.0);
  g.w_beta.assign(n_cols, 0.0);
  g.w_theta[i] = 1.0;
  return g;
}

LinearForm LinearForm::col_coefficient(std::int64_t j, std::int64_t n_rows,
                                       std::int64_t n_cols) {
  if (j < 0 || j >= n_cols) throw DimensionError("column index out of range");
  LinearForm g;
  g.w_theta.assign(n_rows, 0.0);
  g.w_beta.assign(n_cols, 0.0);
  g.w_beta[j] = 1.0;
  return g;
}

LinearForm LinearForm::row_difference(std::int64_t i, std::int64_t k,
                                      std::int64_t n_rows, std::int64_t n_cols) {
  if (i < 0 || i >= n_rows || k < 0 || k >= n_rows) {
    throw DimensionError("row index out of range");
  }
  if (i == k) throw DimensionError("row difference needs two distinct rows");
  LinearForm g;
  g.has_origin = true;
  g.origin_row.assign(n_rows, 0.0);
  g.origin_col.assign(n_cols, 0.0);
  g.origin_row[i] = 1.0;
  g.origin_row[k] = -1.0;
  g.origin_total = 0.0;
  g.w_theta = g.origin_row;
  g.w_beta.assign(n_cols, 0.0);
  return g;
}

LinearForm LinearForm::entry(std::int64_t i, std::int64_t j, std::int64_t n_rows,
                             std::int64_t n_cols) {
  if (i < 0 || i >= n_rows || j < 0 || j >= n_cols) {
    throw DimensionError("cell index out of range");
  }
  LinearForm g;
  g.has_origin = true;
  g.origin_row.assign(n_rows, 0.0);
  g.origin_col.assign(n_cols, 0.0);
  g.origin_row[i] = 1.0;
  g.origin_col[j] = 1.0;
  g.origin_total = 1.0;
  g.w_theta = g.origin_row;
  g.w_beta.assign(n_cols, 0.0);
  g.w_beta[j] = -1.0;
  return g;
}

LinearForm LinearForm::row_effect_projected(std::int64_t i, std::int64_t n_rows,
                                            std::int64_t n_cols) {
  if (i < 0 || i >= n_rows) throw DimensionError("row index out of range");
  LinearForm g;
  g.has_origin = true;
  const double c = 1.0 / static_cast<double>(n_rows);
  g.origin_row.assign(n_rows, -c);
  g.origin_row[i] += 1.0;
  g.origin_col.assign(n_cols, 0.0);
  g.origin_total = 0.0;
  g.w_theta = g.origin_row;
  g.w_beta.assign(n_cols, 0.0);
  return g;
}

LinearForm LinearForm::col_effect_projected(std::int64_t j, std::int64_t n_rows,
                                            std::int64_t n_cols) {
  if (j < 0 || j >= n_cols) throw DimensionError("column index out of range");
  LinearForm g;
  g.has_origin = true;
  const double c = 1.0 / static_cast<double>(n_rows);
  g.origin_row.assign(n_rows, -c);
  g.origin_col.assign(n_cols, 0.0);
  g.origin_col[j] = -1.0;
  g.origin_total = -1.0;
  g.w_theta = g.origin_row;
  g.w_beta.assign(n_cols, 0.0);
  g.w_beta[j] = 1.0;
  return g;
}

double LinearForm::l1_norm_theta() const {
  double s = 0.0;
  for (double v : w_theta) s += std::fabs(v);
  return s;
}

double LinearForm::l1_norm_beta() const {
  double s = 0.0;
  for (double v : w_beta) s += std::fabs(v);
  return s;
}

double evaluate_form(const LinearForm& g, const ModelParams& params) {
  if (g.n_rows() != params.n_rows() || g.n_cols() != params.n_cols()) {
    throw DimensionError("form dimensions do not match parameters");
  }
  double s = 0.0;
  for (std::int64_t i = 0; i < g.n_rows(); ++i) s += g.w_theta[i] * params.theta[i];
  for (std::int64_t j = 0; j < g.n_cols(); ++j) s += g.w_beta[j] * params.beta[j];
  return s;
}

}  // namespace bitmat
