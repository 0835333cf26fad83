#include "bitmat/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bitmat/connectivity.hpp"
#include "bitmat/errors.hpp"
#include "bitmat/likelihood.hpp"
#include "bitmat/logging.hpp"
#include "bitmat/philox.hpp"
#include "bitmat/stats.hpp"

namespace bitmat {

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::improvement:
      return "improvement";
    case StopReason::gradient:
      return "gradient";
    case StopReason::max_sweeps:
      return "max_sweeps";
    case StopReason::stalled:
      return "stalled";
  }
  return "unknown";
}

namespace {

struct SweepWorkspace {
  std::vector<double> g_theta;    // theta gradient at current params
  std::vector<double> row_part;   // per-row log-likelihood partials
  std::vector<double> y_csc;      // observed values in CSC order
  double max_abs_m = 0.0;
  std::int64_t max_m_row = 0, max_m_col = 0;
};

// One CSR pass: log-likelihood and theta gradient at (theta, beta), plus the
// largest |m_ij| for the divergence guard. Row partials are reduced with a
// fixed pairwise tree in row order, so the sum does not depend on how rows
// might be distributed over threads.
double loglik_and_theta_grad(const ObservedBinaryMatrix& data,
                             const ModelParams& params, SweepWorkspace& ws) {
  const auto row_ptr = data.row_ptr();
  const auto col = data.col_index();
  const auto y = data.values();
  ws.max_abs_m = 0.0;
  for (std::int64_t i = 0; i < data.n_rows(); ++i) {
    const double ti = params.theta[i];
    double ll = 0.0, g = 0.0;
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const double m = ti - params.beta[col[k]];
      const double a = std::fabs(m);
      if (a > ws.max_abs_m) {
        ws.max_abs_m = a;
        ws.max_m_row = i;
        ws.max_m_col = col[k];
      }
      ll += static_cast<double>(y[k]) * m - log1p_exp(m);
      g += static_cast<double>(y[k]) - logistic(m);
    }
    ws.row_part[i] = ll;
    ws.g_theta[i] = g;
  }
  return pairwise_sum(ws.row_part);
}

}  // namespace

FitReport fit(const ObservedBinaryMatrix& data, const FitConfig& config) {
  return fit_profile(data, config, {}).report;
}

ProfileReport fit_profile(const ObservedBinaryMatrix& data,
                          const FitConfig& config,
                          const std::vector<LinearForm>& probes) {
  const std::int64_t n = data.n_rows();
  const std::int64_t j = data.n_cols();

  for (std::int64_t i = 0; i < n; ++i) {
    if (data.row_count(i) == 0) {
      throw IdentifiabilityError("row " + std::to_string(i) +
                                 " has no observed entries");
    }
  }
  for (std::int64_t c = 0; c < j; ++c) {
    if (data.col_count(c) == 0) {
      throw IdentifiabilityError("column " + std::to_string(c) +
                                 " has no observed entries");
    }
  }
  if (!config.allow_disconnected) {
    const ConnectivityReport conn = check_connectivity(data);
    if (!conn.connected) {
      throw IdentifiabilityError(
          "design is disconnected (" + std::to_string(conn.components.size()) +
          " components); parameters are not identified");
    }
  }
  if (config.max_sweeps < 1) throw NumericError("max_sweeps must be >= 1");

  const DesignStats stats = data.design_stats();
  const double gamma0 = config.learning_rate.value_or(
      1.0 / static_cast<double>(std::max(stats.n_star_max, stats.j_star_max)));
  const double tol = config.tol.value_or(1e-8 * static_cast<double>(data.n_observed()));
  if (!(gamma0 > 0.0) || !(tol > 0.0) || !(config.grad_tol > 0.0) ||
      !(config.init_half_width > 0.0)) {
    throw NumericError("fit config values must be positive");
  }

  ProfileReport out;
  FitReport& rep = out.report;
  rep.degenerate_rows = data.degenerate_rows();
  rep.degenerate_cols = data.degenerate_cols();
  if (!rep.degenerate_rows.empty() || !rep.degenerate_cols.empty()) {
    log::warn("%zu rows and %zu cols have constant observed values; their MLE does not exist",
              rep.degenerate_rows.size(), rep.degenerate_cols.size());
  }

  Philox rng(config.seed, config.seed_stream);
  ModelParams params;
  params.theta.resize(n);
  params.beta.resize(j);
  const double c = config.init_half_width;
  for (double& t : params.theta) t = rng.uniform(-c, c);
  for (double& b : params.beta) b = rng.uniform(-c, c);
  params = center(params);

  SweepWorkspace ws;
  ws.g_theta.resize(n);
  ws.row_part.resize(n);
  ws.y_csc.resize(data.n_observed());
  {
    const auto csr_pos = data.csr_pos();
    const auto y = data.values();
    for (std::int64_t k = 0; k < data.n_observed(); ++k) {
      ws.y_csc[k] = static_cast<double>(y[csr_pos[k]]);
    }
  }

  double ll = loglik_and_theta_grad(data, params, ws);
  if (!std::isfinite(ll)) {
    throw NumericError("log-likelihood not finite at initialization");
  }
  rep.loglik_trace.push_back(ll);
  out.probe_traces.assign(probes.size(), {});
  for (std::size_t p = 0; p < probes.size(); ++p) {
    out.probe_traces[p].push_back(evaluate_form(probes[p], params));
  }

  const auto col_ptr = data.col_ptr();
  const auto row_idx = data.row_index();

  ModelParams trial;
  trial.theta.resize(n);
  trial.beta.resize(j);
  SweepWorkspace ws_trial = ws;

  bool warned_extreme = false;
  StopReason reason = StopReason::max_sweeps;
  std::int32_t sweep = 0;
  while (sweep < config.max_sweeps) {
    double gamma = gamma0;
    int halvings = 0;
    double ll_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    double beta_grad_max = 0.0;
    while (halvings <= 60) {
      // theta sweep from the gradient already evaluated at current params.
      for (std::int64_t i = 0; i < n; ++i) {
        trial.theta[i] = params.theta[i] + gamma * ws.g_theta[i];
      }
      // beta sweep at (new theta, old beta).
      beta_grad_max = 0.0;
      for (std::int64_t cj = 0; cj < j; ++cj) {
        double g = 0.0;
        for (std::int64_t k = col_ptr[cj]; k < col_ptr[cj + 1]; ++k) {
          g += logistic(trial.theta[row_idx[k]] - params.beta[cj]) - ws.y_csc[k];
        }
        beta_grad_max = std::max(beta_grad_max, std::fabs(g));
        trial.beta[cj] = params.beta[cj] + gamma * g;
      }
      // Centering (Algorithm 1 uses the mean of the fresh theta for both
      // vectors; m_ij is untouched).
      const double mean =
          pairwise_sum(trial.theta) / static_cast<double>(n);
      for (double& t : trial.theta) t -= mean;
      for (double& b : trial.beta) b -= mean;

      ll_new = loglik_and_theta_grad(data, trial, ws_trial);
      if (std::isfinite(ll_new) && ll_new >= ll) {
        accepted = true;
        break;
      }
      ++halvings;
      ++rep.halvings;
      gamma *= 0.5;
    }
    if (!accepted) {
      if (!std::isfinite(ll_new)) {
        throw NumericError("log-likelihood not finite at sweep " +
                           std::to_string(sweep + 1) +
                           " (step size too large)");
      }
      reason = StopReason::stalled;
      break;
    }

    std::swap(params.theta, trial.theta);
    std::swap(params.beta, trial.beta);
    std::swap(ws.g_theta, ws_trial.g_theta);
    ws.max_abs_m = ws_trial.max_abs_m;
    ws.max_m_row = ws_trial.max_m_row;
    ws.max_m_col = ws_trial.max_m_col;
    ++sweep;
    const double improvement = ll_new - ll;
    ll = ll_new;
    rep.loglik_trace.push_back(ll);
    for (std::size_t p = 0; p < probes.size(); ++p) {
      out.probe_traces[p].push_back(evaluate_form(probes[p], params));
    }

    if (ws.max_abs_m > 30.0) {
      rep.extreme_m = true;
      if (!warned_extreme) {
        warned_extreme = true;
        log::warn(
            "|m| exceeded 30 at cell (%lld,%lld) during sweep %d; margin is near-degenerate",
            static_cast<long long>(ws.max_m_row),
            static_cast<long long>(ws.max_m_col), sweep);
      }
    }

    if (improvement < tol) {
      reason = StopReason::improvement;
      break;
    }
    double theta_grad_max = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      theta_grad_max = std::max(theta_grad_max, std::fabs(ws.g_theta[i]));
    }
    if (std::max(theta_grad_max, beta_grad_max) < config.grad_tol) {
      // beta_grad_max is one half-step stale; confirm with an exact gradient
      // before declaring a gradient stop.
      const auto [gt, gb] = gradient(params, data);
      double gmax = 0.0;
      for (double v : gt) gmax = std::max(gmax, std::fabs(v));
      for (double v : gb) gmax = std::max(gmax, std::fabs(v));
      if (gmax < config.grad_tol) {
        reason = StopReason::gradient;
        break;
      }
    }
  }

  rep.sweeps = sweep;
  rep.stop_reason = reason;
  rep.params = center(params);
  rep.final_loglik = ll;

  const auto [gt, gb] = gradient(rep.params, data);
  double gmax = 0.0;
  bool certificate = true;
  for (std::int64_t i = 0; i < n; ++i) {
    gmax = std::max(gmax, std::fabs(gt[i]));
    if (std::fabs(gt[i]) >
        config.grad_tol * (1.0 + static_cast<double>(data.row_count(i)))) {
      certificate = false;
    }
  }
  for (std::int64_t cj = 0; cj < j; ++cj) {
    gmax = std::max(gmax, std::fabs(gb[cj]));
    if (std::fabs(gb[cj]) >
        config.grad_tol * (1.0 + static_cast<double>(data.col_count(cj)))) {
      certificate = false;
    }
  }
  rep.grad_max_norm = gmax;
  rep.converged = certificate;
  log::info("fit: %d sweeps, loglik %.6f, grad max %.3e, stop=%s, converged=%d",
            rep.sweeps, rep.final_loglik, rep.grad_max_norm, to_string(reason),
            static_cast<int>(rep.converged));
  return out;
}

}  // namespace bitmat
