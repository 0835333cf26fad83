#include "bitmat/inference.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "bitmat/connectivity.hpp"
#include "bitmat/errors.hpp"
#include "bitmat/logging.hpp"
#include "bitmat/stats.hpp"

namespace bitmat {

const char* to_string(VarianceMethod m) {
  switch (m) {
    case VarianceMethod::true_param:
      return "true_param";
    case VarianceMethod::plug_in:
      return "plug_in";
    case VarianceMethod::refined:
      return "refined";
    case VarianceMethod::exact_oracle:
      return "exact_oracle";
  }
  return "unknown";
}

VarianceMethod variance_method_from_string(const std::string& name) {
  if (name == "true_param" || name == "true") return VarianceMethod::true_param;
  if (name == "plug_in" || name == "plugin") return VarianceMethod::plug_in;
  if (name == "refined") return VarianceMethod::refined;
  if (name == "exact_oracle" || name == "exact") return VarianceMethod::exact_oracle;
  throw ParseError("unknown variance method '" + name + "'");
}

namespace {

void require_form_dims(const LinearForm& g, const SigmaStats& sigma) {
  if (g.n_rows() != static_cast<std::int64_t>(sigma.row.size()) ||
      g.n_cols() != static_cast<std::int64_t>(sigma.col.size())) {
    throw DimensionError("form dimensions do not match sigma statistics");
  }
}

void require_origin(const LinearForm& g, const char* what) {
  if (!g.has_origin) {
    throw DimensionError(std::string(what) +
                         " needs a form with entry-weight origin margins");
  }
}

void require_cells(const SigmaStats& sigma, const ObservedBinaryMatrix& data,
                   const char* what) {
  if (static_cast<std::int64_t>(sigma.cell.size()) != data.n_observed()) {
    throw DimensionError(std::string(what) +
                         ": sigma statistics were not computed on this data");
  }
}

}  // namespace

VarianceEstimate variance_main(const LinearForm& g, const SigmaStats& sigma,
                               VarianceMethod method) {
  if (method != VarianceMethod::true_param && method != VarianceMethod::plug_in) {
    throw NumericError("variance_main only computes true_param or plug_in");
  }
  require_form_dims(g, sigma);
  VarianceEstimate v;
  v.method = method;
  for (std::int64_t i = 0; i < g.n_rows(); ++i) {
    const double w = g.w_theta[i];
    if (w == 0.0) continue;
    if (!(sigma.row[i] > 0.0)) {
      throw NumericError("row " + std::to_string(i) +
                         " carries weight but has zero variance aggregate");
    }
    v.row_component += w * w / sigma.row[i];
  }
  for (std::int64_t j = 0; j < g.n_cols(); ++j) {
    const double w = g.w_beta[j];
    if (w == 0.0) continue;
    if (!(sigma.col[j] > 0.0)) {
      throw NumericError("column " + std::to_string(j) +
                         " carries weight but has zero variance aggregate");
    }
    v.col_component += w * w / sigma.col[j];
  }
  v.value = v.row_component + v.col_component;
  return v;
}

VarianceEstimate variance_refined(const LinearForm& g, const SigmaStats& sigma,
                                  const ObservedBinaryMatrix& data) {
  require_form_dims(g, sigma);
  require_origin(g, "variance_refined");
  require_cells(sigma, data, "variance_refined");
  const std::int64_t n = data.n_rows();
  const std::int64_t jn = data.n_cols();

  VarianceEstimate v;
  v.method = VarianceMethod::refined;
  // Scaled margins w_{i+}/sigma^2_{i+}, w_{+j}/sigma^2_{+j}; zero-weight
  // coordinates never divide by their sigma.
  std::vector<double> row_scaled(n, 0.0), col_scaled(jn, 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    const double w = g.origin_row[i];
    if (w == 0.0) continue;
    if (!(sigma.row[i] > 0.0)) {
      throw NumericError("row " + std::to_string(i) +
                         " carries weight but has zero variance aggregate");
    }
    row_scaled[i] = w / sigma.row[i];
    v.row_component += w * w / sigma.row[i];
  }
  for (std::int64_t j = 0; j < jn; ++j) {
    const double w = g.origin_col[j];
    if (w == 0.0) continue;
    if (!(sigma.col[j] > 0.0)) {
      throw NumericError("column " + std::to_string(j) +
                         " carries weight but has zero variance aggregate");
    }
    col_scaled[j] = w / sigma.col[j];
    v.col_component += w * w / sigma.col[j];
  }

  double cross = 0.0;
  const auto row_ptr = data.row_ptr();
  const auto col = data.col_index();
  for (std::int64_t i = 0; i < n; ++i) {
    if (row_scaled[i] == 0.0) continue;
    double s = 0.0;
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      s += col_scaled[col[k]] * sigma.cell[k];
    }
    cross += row_scaled[i] * s;
  }
  v.extra_terms = 2.0 * cross -
                  3.0 * g.origin_total * g.origin_total / sigma.total;
  v.value = v.row_component + v.col_component + v.extra_terms;
  return v;
}

VarianceEstimate exact_variance(const LinearForm& g, const SigmaStats& sigma,
                                const ObservedBinaryMatrix& data) {
  require_form_dims(g, sigma);
  require_origin(g, "exact_variance");
  require_cells(sigma, data, "exact_variance");
  const std::int64_t n = data.n_rows();
  const std::int64_t jn = data.n_cols();
  if (n + jn > 2000) {
    throw NumericError("exact_variance size guard: N + J = " +
                       std::to_string(n + jn) + " exceeds 2000");
  }
  {
    const ConnectivityReport conn = check_connectivity(data);
    if (!conn.connected) {
      throw IdentifiabilityError(
          "exact_variance requires a connected design (" +
          std::to_string(conn.components.size()) + " components found)");
    }
  }

  const double b = g.origin_total / sigma.total;

  // Unknowns f_0..f_{N-2}, m_0..m_{J-2}; the last f and m are substituted out
  // via the sum-zero side conditions, and the last row and column equations
  // (linear combinations of the rest) are dropped.
  const std::int64_t dim = (n - 1) + (jn - 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs(dim);

  const double sig_row_last = sigma.row[n - 1];
  const double sig_col_last = sigma.col[jn - 1];
  const auto row_ptr = data.row_ptr();
  const auto col_ptr = data.col_ptr();
  const auto col = data.col_index();
  const auto row = data.row_index();
  const auto csr_pos = data.csr_pos();

  for (std::int64_t i = 0; i + 1 < n; ++i) {
    rhs[i] = g.origin_row[i] - b * sigma.row[i];
    a(i, i) += sigma.row[i];
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const std::int64_t j = col[k];
      const double s = sigma.cell[k];
      if (j + 1 < jn) {
        a(i, (n - 1) + j) += s;
      } else {
        // m_{J-1} = -sum_{j'<J-1} sigma^2_{+j'} m_{j'} / sigma^2_{+,J-1}
        for (std::int64_t jp = 0; jp + 1 < jn; ++jp) {
          a(i, (n - 1) + jp) -= s * sigma.col[jp] / sig_col_last;
        }
      }
    }
  }
  for (std::int64_t j = 0; j + 1 < jn; ++j) {
    const std::int64_t r = (n - 1) + j;
    rhs[r] = g.origin_col[j] - b * sigma.col[j];
    a(r, r) += sigma.col[j];
    for (std::int64_t k = col_ptr[j]; k < col_ptr[j + 1]; ++k) {
      const std::int64_t i = row[k];
      const double s = sigma.cell[csr_pos[k]];
      if (i + 1 < n) {
        a(r, i) += s;
      } else {
        for (std::int64_t ip = 0; ip + 1 < n; ++ip) {
          a(r, ip) -= s * sigma.row[ip] / sig_row_last;
        }
      }
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::VectorXd x = lu.solve(rhs);
  const double resid = (a * x - rhs).cwiseAbs().maxCoeff();
  const double scale = rhs.cwiseAbs().maxCoeff() + 1.0;
  if (!x.allFinite() || resid > 1e-8 * scale) {
    throw NumericError("exact_variance linear system is singular or ill-conditioned"
                       " (residual " + std::to_string(resid) + ")");
  }

  std::vector<double> f(n), m(jn);
  double f_last = 0.0, m_last = 0.0;
  for (std::int64_t i = 0; i + 1 < n; ++i) {
    f[i] = x[i];
    f_last -= sigma.row[i] * x[i];
  }
  f[n - 1] = f_last / sig_row_last;
  for (std::int64_t j = 0; j + 1 < jn; ++j) {
    m[j] = x[(n - 1) + j];
    m_last -= sigma.col[j] * m[j];
  }
  m[jn - 1] = m_last / sig_col_last;

  VarianceEstimate v;
  v.method = VarianceMethod::exact_oracle;
  for (std::int64_t i = 0; i < n; ++i) v.row_component += sigma.row[i] * f[i] * f[i];
  for (std::int64_t j = 0; j < jn; ++j) v.col_component += sigma.col[j] * m[j] * m[j];
  double cross = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      s += sigma.cell[k] * m[col[k]];
    }
    cross += f[i] * s;
  }
  v.extra_terms = b * b * sigma.total + 2.0 * cross;
  v.value = v.row_component + v.col_component + v.extra_terms;
  return v;
}

namespace {

InferenceResult make_result(double estimate, double se, double level,
                            VarianceEstimate variance) {
  if (!(level > 0.0 && level < 1.0)) {
    throw NumericError("confidence level must lie strictly in (0,1)");
  }
  if (!(se > 0.0) || !std::isfinite(se)) {
    throw NumericError("standard error must be positive and finite");
  }
  InferenceResult r;
  r.estimate = estimate;
  r.se = se;
  r.level = level;
  const double zq = normal_quantile(0.5 + level / 2.0);
  r.ci_lower = estimate - zq * se;
  r.ci_upper = estimate + zq * se;
  r.z_stat = estimate / se;
  r.p_value = two_sided_p(r.z_stat);
  r.log10_p = two_sided_log10_p(r.z_stat);
  r.variance = variance;
  return r;
}

}  // namespace

InferenceResult wald_interval(const LinearForm& g, const ModelParams& fitted,
                              const SigmaStats& sigma,
                              const ObservedBinaryMatrix& data, double level,
                              VarianceMethod method) {
  VarianceEstimate v;
  switch (method) {
    case VarianceMethod::true_param:
    case VarianceMethod::plug_in:
      v = variance_main(g, sigma, method);
      break;
    case VarianceMethod::refined:
      v = variance_refined(g, sigma, data);
      break;
    case VarianceMethod::exact_oracle:
      v = exact_variance(g, sigma, data);
      break;
  }
  const double norm_theta = g.l1_norm_theta();
  const double norm_beta = g.l1_norm_beta();
  if (norm_theta > 16.0 || norm_beta > 16.0) {
    log::info("form has large L1 norms (%g, %g); the normal approximation may be poor",
              norm_theta, norm_beta);
  }
  return make_result(evaluate_form(g, fitted), std::sqrt(v.value), level, v);
}

InferenceResult wald_from_estimate(double estimate, double se, double level) {
  VarianceEstimate v;
  v.method = VarianceMethod::plug_in;
  v.value = se * se;
  v.row_component = v.value;
  return make_result(estimate, se, level, v);
}

InferenceResult test_difference(std::int64_t i, std::int64_t k,
                                const ModelParams& fitted,
                                const ObservedBinaryMatrix& data, double level) {
  if (i == k) {
    throw DimensionError("test_difference needs two distinct rows");
  }
  const LinearForm g = LinearForm::row_difference(i, k, data.n_rows(), data.n_cols());
  const SigmaStats sigma = sigma_stats(fitted, data);
  const VarianceEstimate v = variance_main(g, sigma, VarianceMethod::plug_in);
  return make_result(evaluate_form(g, fitted), std::sqrt(v.value), level, v);
}

InferenceDiagnostics inference_diagnostics(const DesignStats& stats,
                                           std::int64_t n_rows) {
  InferenceDiagnostics d;
  const double log_n = std::log(static_cast<double>(n_rows));
  const double jstar = static_cast<double>(stats.j_star_min);
  d.jstar2_nstar_log2 =
      static_cast<double>(stats.n_star_min) * log_n * log_n / (jstar * jstar);
  d.log_n_over_jstar = log_n / jstar;
  return d;
}

}  // namespace bitmat
