#pragma once

#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

#include "bitmat/observed_matrix.hpp"

namespace bitmat {

// A linear functional g(M) = w_g . theta + w_tilde_g . beta.
//
// Forms born from entry weights {w_ij} additionally carry their margin sums
// w_{i+}, w_{+j}, w_{++} ("origin"). The identities w_g[i] = w_{i+} and
// w_tilde_g[j] = -w_{+j} hold exactly for such forms. The refined and exact
// variance formulas consume entry weights only through these margins, so the
// margins are all that is stored.
struct LinearForm {
  std::vector<double> w_theta;  // w_g, length N
  std::vector<double> w_beta;   // w_tilde_g, length J

  bool has_origin = false;
  std::vector<double> origin_row;  // w_{i+}
  std::vector<double> origin_col;  // w_{+j}
  double origin_total = 0.0;       // w_{++}

  static LinearForm from_coefficients(std::vector<double> w_theta,
                                      std::vector<double> w_beta);

  // Entry weights (i, j, w); cells may be observed or missing.
  static LinearForm from_entry_weights(
      std::int64_t n_rows, std::int64_t n_cols,
      std::span<const std::tuple<std::int32_t, std::int32_t, double>> weights);

  // g = theta_i as a bare coefficient vector (w_g = e_i); no origin. This is
  // the representation behind the (sigma^2_{i+})^{-1} standard errors.
  static LinearForm row_coefficient(std::int64_t i, std::int64_t n_rows,
                                    std::int64_t n_cols);
  // g = beta_j as a bare coefficient vector.
  static LinearForm col_coefficient(std::int64_t j, std::int64_t n_rows,
                                    std::int64_t n_cols);
  // g = theta_i - theta_k; margins are consistent, so it carries an origin.
  static LinearForm row_difference(std::int64_t i, std::int64_t k,
                                   std::int64_t n_rows, std::int64_t n_cols);
  // g = m_ij = theta_i - beta_j, origin w_ij = 1.
  static LinearForm entry(std::int64_t i, std::int64_t j, std::int64_t n_rows,
                          std::int64_t n_cols);
  // g = theta_i written with entry-weight margins (w_{k+} = delta_ik - 1/N,
  // w_{+j} = 0): equal to theta_i on the sum-zero parameter space and valid
  // input for the refined/exact variance routes.
  static LinearForm row_effect_projected(std::int64_t i, std::int64_t n_rows,
                                         std::int64_t n_cols);
  // g = beta_j via margins (w_{i+} = -1/N, w_{+l} = -delta_jl).
  static LinearForm col_effect_projected(std::int64_t j, std::int64_t n_rows,
                                         std::int64_t n_cols);

  std::int64_t n_rows() const { return static_cast<std::int64_t>(w_theta.size()); }
  std::int64_t n_cols() const { return static_cast<std::int64_t>(w_beta.size()); }

  double l1_norm_theta() const;
  double l1_norm_beta() const;
};

// w_g . theta + w_tilde_g . beta.
double evaluate_form(const LinearForm& g, const ModelParams& params);

}  // namespace bitmat
