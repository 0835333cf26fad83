#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bitmat/linear_form.hpp"
#include "bitmat/observed_matrix.hpp"

namespace bitmat {

struct FitConfig {
  // Step size gamma; defaults to 1/max(N*, J*) for the given data, which
  // keeps every coordinate update well inside the stable region.
  std::optional<double> learning_rate;
  // Stop when the per-sweep log-likelihood improvement falls below this;
  // defaults to 1e-8 * n_observed (scale-free per-observation tolerance).
  std::optional<double> tol;
  // Stop when the gradient max-norm falls below this.
  double grad_tol = 1e-6;
  std::int32_t max_sweeps = 10000;
  // Initialization is Uniform(-c, c) per coordinate.
  double init_half_width = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t seed_stream = 0;
  // Skips the identifiability precondition; the optimum is then not unique
  // and the caller owns the consequences.
  bool allow_disconnected = false;
};

enum class StopReason : std::uint8_t {
  improvement,  // log-likelihood gain per sweep fell below tol
  gradient,     // gradient max-norm fell below grad_tol
  max_sweeps,
  stalled,  // backtracking could not find an ascent step (numerical floor)
};

const char* to_string(StopReason r);

struct FitReport {
  ModelParams params;  // centered
  double final_loglik = 0.0;
  std::int32_t sweeps = 0;
  bool converged = false;
  StopReason stop_reason = StopReason::max_sweeps;
  double grad_max_norm = 0.0;
  std::vector<double> loglik_trace;  // entry 0 is the initial value
  // Pre-fit existence screening: margins whose observed values are all equal
  // (their MLE walks off to infinity). Advisory; nothing is removed here.
  std::vector<std::int32_t> degenerate_rows;
  std::vector<std::int32_t> degenerate_cols;
  bool extreme_m = false;  // some |m_ij| exceeded 30 during fitting
  std::int32_t halvings = 0;
};

struct ProfileReport {
  FitReport report;
  // One trace per probe, aligned with loglik_trace (entry 0 = initial params).
  std::vector<std::vector<double>> probe_traces;
};

// Constrained MLE by alternating gradient ascent: theta sweep with beta
// fixed, then beta sweep with the fresh theta, then centering, repeated until
// a stopping rule fires. Sweeps that would lower the log-likelihood are
// retried with a halved step, so the accepted trace is non-decreasing.
// `converged` reports the first-order certificate
// |dl/dtheta_i| <= grad_tol*(1+|S_J(i)|), |dl/dbeta_j| <= grad_tol*(1+|S_N(j)|).
FitReport fit(const ObservedBinaryMatrix& data, const FitConfig& config);

// fit() plus per-sweep evaluation of each probe form at the current params.
ProfileReport fit_profile(const ObservedBinaryMatrix& data,
                          const FitConfig& config,
                          const std::vector<LinearForm>& probes);

}  // namespace bitmat
