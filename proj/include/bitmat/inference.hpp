#pragma once

#include <cstdint>
#include <string>

#include "bitmat/likelihood.hpp"
#include "bitmat/linear_form.hpp"
#include "bitmat/observed_matrix.hpp"

namespace bitmat {

enum class VarianceMethod : std::uint8_t {
  true_param,   // sum w_gi^2/sigma^2_{i+} + sum w~_gj^2/sigma^2_{+j} at truth
  plug_in,      // the same formula at the fitted parameters
  refined,      // adds the cross and total-weight corrections
  exact_oracle  // solves the (N+J+1)-equation linear system exactly
};

const char* to_string(VarianceMethod m);
VarianceMethod variance_method_from_string(const std::string& name);

struct VarianceEstimate {
  double value = 0.0;
  VarianceMethod method = VarianceMethod::plug_in;
  double row_component = 0.0;  // sum over rows
  double col_component = 0.0;  // sum over columns
  double extra_terms = 0.0;    // refined/exact corrections; 0 for the main methods
};

struct InferenceResult {
  double estimate = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double level = 0.0;
  double z_stat = 0.0;
  double p_value = 0.0;   // two-sided; underflows to 0 below ~1e-308
  double log10_p = 0.0;   // exact magnitude even when p_value underflows
  VarianceEstimate variance;
};

// Main variance approximation:
//   sum_i w_gi^2 / sigma^2_{i+} + sum_j w~_gj^2 / sigma^2_{+j}.
// `method` must be true_param or plug_in and records which parameters the
// caller evaluated `sigma` at. Zero-weight coordinates never touch their
// sigma; a nonzero weight on an aggregate of zero variance is an error.
VarianceEstimate variance_main(const LinearForm& g, const SigmaStats& sigma,
                               VarianceMethod method);

// Refined approximation, valid for forms carrying entry-weight margins:
//   sum_i w_{i+}^2/sigma^2_{i+} + sum_j w_{+j}^2/sigma^2_{+j}
//   + 2 sum_{obs (i,j)} w_{i+} w_{+j} sigma^2_ij / (sigma^2_{i+} sigma^2_{+j})
//   - 3 w_{++}^2 / sigma^2_{++}.
VarianceEstimate variance_refined(const LinearForm& g, const SigmaStats& sigma,
                                  const ObservedBinaryMatrix& data);

// Exact sigma^2(g) for small instances: solves for the three-way
// decomposition d_ij = b + f_i + m_j with b = w_{++}/sigma^2_{++},
//   sigma^2_{i+} f_i + sum_{j in S_J(i)} sigma^2_ij m_j = w_{i+} - b sigma^2_{i+}
//   sigma^2_{+j} m_j + sum_{i in S_N(j)} sigma^2_ij f_i = w_{+j} - b sigma^2_{+j}
// subject to sum_i sigma^2_{i+} f_i = 0 and sum_j sigma^2_{+j} m_j = 0, and
// returns b^2 sigma^2_{++} + sum sigma^2_{i+} f_i^2 + sum sigma^2_{+j} m_j^2
//   + 2 sum_{obs} sigma^2_ij f_i m_j.
// The side conditions are enforced by substituting out one f and one m
// coordinate; the reduced dense system is solved by a pivoted factorization.
// Requires a connected design and N + J <= 2000.
VarianceEstimate exact_variance(const LinearForm& g, const SigmaStats& sigma,
                                const ObservedBinaryMatrix& data);

// Wald interval / two-sided z test for g at the fitted parameters, with the
// variance computed by the chosen method (sigma must be the plug-in stats for
// plug_in/refined/exact_oracle; pass true-parameter stats with true_param).
InferenceResult wald_interval(const LinearForm& g, const ModelParams& fitted,
                              const SigmaStats& sigma,
                              const ObservedBinaryMatrix& data, double level,
                              VarianceMethod method = VarianceMethod::plug_in);

// The same inference arithmetic from a reported estimate and standard error.
InferenceResult wald_from_estimate(double estimate, double se, double level);

// H0: theta_i = theta_k via g = theta_i - theta_k with plug-in variance
// 1/sigma^2_{i+} + 1/sigma^2_{k+}.
InferenceResult test_difference(std::int64_t i, std::int64_t k,
                                const ModelParams& fitted,
                                const ObservedBinaryMatrix& data,
                                double level = 0.95);

// Design diagnostics reported with fits: ratios that should be small for the
// normal approximation to be trustworthy.
struct InferenceDiagnostics {
  double jstar2_nstar_log2 = 0.0;  // N_* (log N)^2 / J_*^2
  double log_n_over_jstar = 0.0;   // (log N) / J_*
};
InferenceDiagnostics inference_diagnostics(const DesignStats& stats,
                                           std::int64_t n_rows);

}  // namespace bitmat
