#include "bitmat/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bitmat/connectivity.hpp"
#include "bitmat/errors.hpp"
#include "bitmat/inference.hpp"
#include "bitmat/likelihood.hpp"
#include "bitmat/logging.hpp"
#include "bitmat/parallel.hpp"
#include "bitmat/philox.hpp"
#include "bitmat/stats.hpp"

namespace bitmat {

namespace {

// Splits replication r off the study seed without overlapping streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

void check_cells_cover(std::int64_t n_rows, std::int64_t n_cols,
                       const std::vector<std::pair<std::int32_t, std::int32_t>>& cells) {
  std::vector<char> row_hit(n_rows, 0), col_hit(n_cols, 0);
  for (const auto& [i, j] : cells) {
    row_hit[i] = 1;
    col_hit[j] = 1;
  }
  for (std::int64_t i = 0; i < n_rows; ++i) {
    if (!row_hit[i]) {
      throw NumericError("design generation left row " + std::to_string(i) +
                         " with no observations");
    }
  }
  for (std::int64_t j = 0; j < n_cols; ++j) {
    if (!col_hit[j]) {
      throw NumericError("design generation left column " + std::to_string(j) +
                         " with no observations");
    }
  }
}

}  // namespace

std::vector<std::pair<std::int32_t, std::int32_t>> MissingDesign::cells(
    std::uint64_t seed, std::uint64_t stream) const {
  std::vector<std::pair<std::int32_t, std::int32_t>> out;
  switch (kind) {
    case Kind::full: {
      out.reserve(static_cast<std::size_t>(n_rows * n_cols));
      for (std::int32_t i = 0; i < n_rows; ++i) {
        for (std::int32_t j = 0; j < n_cols; ++j) out.emplace_back(i, j);
      }
      break;
    }
    case Kind::block: {
      const std::int64_t rows_per = n_rows / row_clusters;
      const std::int64_t cols_per = n_cols / col_clusters;
      for (std::int32_t i = 0; i < n_rows; ++i) {
        const std::int64_t r = i / rows_per;
        for (std::int32_t j = 0; j < n_cols; ++j) {
          const std::int64_t c = j / cols_per;
          if (block_mask[r * col_clusters + c]) out.emplace_back(i, j);
        }
      }
      break;
    }
    case Kind::bernoulli: {
      Philox rng(seed, stream);
      for (std::int32_t i = 0; i < n_rows; ++i) {
        for (std::int32_t j = 0; j < n_cols; ++j) {
          if (rng.bernoulli(rate)) out.emplace_back(i, j);
        }
      }
      break;
    }
    case Kind::explicit_mask:
      out = explicit_cells;
      std::sort(out.begin(), out.end());
      break;
  }
  check_cells_cover(n_rows, n_cols, out);
  return out;
}

MissingDesign make_full_design(std::int64_t n_rows, std::int64_t n_cols) {
  MissingDesign d;
  d.kind = MissingDesign::Kind::full;
  d.n_rows = n_rows;
  d.n_cols = n_cols;
  return d;
}

MissingDesign make_bernoulli_design(std::int64_t n_rows, std::int64_t n_cols, double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw NumericError("bernoulli design rate must lie in (0,1]");
  }
  MissingDesign d;
  d.kind = MissingDesign::Kind::bernoulli;
  d.n_rows = n_rows;
  d.n_cols = n_cols;
  d.rate = rate;
  return d;
}

MissingDesign make_explicit_design(std::int64_t n_rows, std::int64_t n_cols,
                                   std::vector<std::pair<std::int32_t, std::int32_t>> cells) {
  MissingDesign d;
  d.kind = MissingDesign::Kind::explicit_mask;
  d.n_rows = n_rows;
  d.n_cols = n_cols;
  d.explicit_cells = std::move(cells);
  return d;
}

MissingDesign make_block_design(std::int64_t n_rows, std::int64_t n_cols) {
  if (n_rows % 5 != 0 || n_cols % 4 != 0) {
    throw DimensionError("block design needs n_rows divisible by 5 and n_cols by 4");
  }
  MissingDesign d;
  d.kind = MissingDesign::Kind::block;
  d.n_rows = n_rows;
  d.n_cols = n_cols;
  d.row_clusters = 5;
  d.col_clusters = 4;
  // Column c of the pattern reads down the five row clusters:
  // (1,0,0,1,0), (1,1,0,0,1), (0,1,1,1,0), (0,0,1,0,1).
  d.block_mask = {
      1, 1, 0, 0,
      0, 1, 1, 0,
      0, 0, 1, 1,
      1, 0, 1, 0,
      0, 1, 0, 1,
  };
  return d;
}

DesignStats design_stats(std::int64_t n_rows, std::int64_t n_cols,
                         const std::vector<std::pair<std::int32_t, std::int32_t>>& cells) {
  std::vector<std::int64_t> per_row(n_rows, 0), per_col(n_cols, 0);
  for (const auto& [i, j] : cells) {
    ++per_row[i];
    ++per_col[j];
  }
  DesignStats s;
  s.j_star_min = *std::min_element(per_row.begin(), per_row.end());
  s.j_star_max = *std::max_element(per_row.begin(), per_row.end());
  s.n_star_min = *std::min_element(per_col.begin(), per_col.end());
  s.n_star_max = *std::max_element(per_col.begin(), per_col.end());
  s.missing_fraction = 1.0 - static_cast<double>(cells.size()) /
                                 (static_cast<double>(n_rows) * static_cast<double>(n_cols));
  return s;
}

ModelParams draw_parameters(std::int64_t n_rows, std::int64_t n_cols,
                            std::uint64_t seed, std::uint64_t stream) {
  Philox rng(seed, stream);
  ModelParams params;
  params.theta.resize(n_rows);
  params.beta.resize(n_cols);
  // Center-then-reject keeps the sum-zero constraint exact; acceptance decays
  // slowly with N but each round is a single pass, and the cap turns a
  // pathological configuration into a loud error.
  constexpr std::int64_t kMaxRounds = 1000000;
  std::int64_t round = 0;
  for (;; ++round) {
    if (round >= kMaxRounds) {
      throw NumericError("draw_parameters: rejection sampler exceeded 1e6 rounds");
    }
    for (double& t : params.theta) t = rng.uniform(-2.0, 2.0);
    const double mean = pairwise_sum(params.theta) / static_cast<double>(n_rows);
    bool ok = true;
    for (double& t : params.theta) {
      t -= mean;
      if (std::fabs(t) > 2.0) ok = false;
    }
    if (ok) break;
  }
  for (double& b : params.beta) b = rng.uniform(-2.0, 2.0);
  return params;
}

ObservedBinaryMatrix simulate_matrix(const ModelParams& params,
                                     const MissingDesign& design,
                                     std::uint64_t seed, std::uint64_t stream) {
  if (params.n_rows() != design.n_rows || params.n_cols() != design.n_cols) {
    throw DimensionError("parameter dimensions do not match the design");
  }
  const auto cells = design.cells(seed, stream);
  Philox rng(mix_seed(seed, stream + 0x6A09E667ull), stream);
  std::vector<Entry> entries;
  entries.reserve(cells.size());
  for (const auto& [i, j] : cells) {
    const double p = logistic(params.theta[i] - params.beta[j]);
    entries.push_back(Entry{i, j, static_cast<std::uint8_t>(rng.bernoulli(p) ? 1 : 0)});
  }
  return ObservedBinaryMatrix(design.n_rows, design.n_cols, std::move(entries));
}

namespace {

// Everything one replication contributes, stored per replication and folded
// into the report in replication order.
struct RepResult {
  bool ok = false;
  std::vector<std::uint8_t> hit_m;
  std::vector<std::uint8_t> hit_theta;
  std::vector<std::uint8_t> hit_beta;
  double sq_m = 0.0;  // summed over all observed cells
  double sq_theta = 0.0;
  double sq_beta = 0.0;
  std::vector<double> var_target_est;      // g(M-hat) per variance target
  std::vector<double> var_target_plugin;   // plug-in variance per target
  double est_m00 = 0.0, est_theta0 = 0.0, est_beta0 = 0.0;
};

struct Target {
  char kind;
  std::int32_t i, j;
};

}  // namespace

CoverageReport run_study(const SimStudyConfig& config) {
  if (config.replications < 1) throw NumericError("replications must be >= 1");
  if (!(config.level > 0.0 && config.level < 1.0)) {
    throw NumericError("level must lie strictly in (0,1)");
  }

  // Stream 0 of the study seed drives setup (truth, mask, target sampling);
  // replication r uses stream r+1.
  const ModelParams truth = draw_parameters(config.n_rows, config.n_cols, config.seed, 0);
  if (config.design.n_rows != config.n_rows || config.design.n_cols != config.n_cols) {
    throw DimensionError("study design dimensions disagree with the config");
  }
  // The mask is part of the study design: materialize it once and hold it
  // fixed across replications (only Y is redrawn).
  const MissingDesign design = make_explicit_design(
      config.n_rows, config.n_cols, config.design.cells(config.seed, 0));
  const ObservedBinaryMatrix skeleton = simulate_matrix(truth, design, config.seed, 0);
  {
    const auto conn = check_connectivity(skeleton);
    if (!conn.connected) {
      throw IdentifiabilityError("study design is disconnected");
    }
  }
  const std::int64_t n = config.n_rows;
  const std::int64_t jn = config.n_cols;
  const std::int64_t n_obs = skeleton.n_observed();
  const auto row_ptr = skeleton.row_ptr();
  const auto col_idx = skeleton.col_index();

  // True m and per-cell (row, col) lookup in CSR order.
  std::vector<std::int32_t> cell_row(n_obs);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      cell_row[k] = static_cast<std::int32_t>(i);
    }
  }

  Philox setup_rng(mix_seed(config.seed, 0xC0FFEEull), 0);
  // Coverage targets on the observed support, optionally subsampled.
  std::vector<std::int64_t> m_target_cells(n_obs);
  for (std::int64_t k = 0; k < n_obs; ++k) m_target_cells[k] = k;
  if (config.m_target_sample >= 0 &&
      config.m_target_sample < static_cast<std::int64_t>(m_target_cells.size())) {
    for (std::int64_t k = 0; k < config.m_target_sample; ++k) {
      const std::int64_t pick =
          k + static_cast<std::int64_t>(setup_rng.next_double() *
                                        static_cast<double>(n_obs - k));
      std::swap(m_target_cells[k], m_target_cells[pick]);
    }
    m_target_cells.resize(config.m_target_sample);
    std::sort(m_target_cells.begin(), m_target_cells.end());
  }
  const std::int64_t n_m_targets = static_cast<std::int64_t>(m_target_cells.size());

  // Variance-comparison targets: up to `variance_targets_per_kind` of each of
  // m_ij (observed cells), theta_i, beta_j.
  std::vector<Target> var_targets;
  {
    const std::int64_t km = std::min<std::int64_t>(config.variance_targets_per_kind, n_obs);
    const std::int64_t kt = std::min<std::int64_t>(config.variance_targets_per_kind, n);
    const std::int64_t kb = std::min<std::int64_t>(config.variance_targets_per_kind, jn);
    std::vector<std::int64_t> cells(n_obs);
    for (std::int64_t k = 0; k < n_obs; ++k) cells[k] = k;
    for (std::int64_t k = 0; k < km; ++k) {
      const std::int64_t pick =
          k + static_cast<std::int64_t>(setup_rng.next_double() *
                                        static_cast<double>(n_obs - k));
      std::swap(cells[k], cells[pick]);
      var_targets.push_back(Target{'m', cell_row[cells[k]], col_idx[cells[k]]});
    }
    for (std::int64_t k = 0; k < kt; ++k) {
      const std::int64_t pick =
          k + static_cast<std::int64_t>(setup_rng.next_double() * static_cast<double>(n - k));
      var_targets.push_back(Target{'t', static_cast<std::int32_t>(pick), 0});
    }
    for (std::int64_t k = 0; k < kb; ++k) {
      const std::int64_t pick =
          k + static_cast<std::int64_t>(setup_rng.next_double() * static_cast<double>(jn - k));
      var_targets.push_back(Target{'b', 0, static_cast<std::int32_t>(pick)});
    }
  }

  const SigmaStats sigma_true = sigma_stats(truth, skeleton);
  const double zq = normal_quantile(0.5 + config.level / 2.0);

  const std::int32_t reps = config.replications;
  std::vector<RepResult> results(reps);

  parallel_for(reps, config.threads, [&](std::size_t r) {
    RepResult& res = results[r];
    try {
      const ObservedBinaryMatrix data =
          simulate_matrix(truth, design, config.seed, static_cast<std::uint64_t>(r) + 1);
      FitConfig fc = config.fit;
      fc.seed = mix_seed(config.seed, 0xF17ull + r);
      const FitReport fit_rep = fit(data, fc);
      const ModelParams& est = fit_rep.params;
      for (double v : est.theta) {
        if (!std::isfinite(v)) throw NumericError("non-finite theta");
      }
      for (double v : est.beta) {
        if (!std::isfinite(v)) throw NumericError("non-finite beta");
      }
      const SigmaStats sig_hat = sigma_stats(est, data);

      res.hit_theta.resize(n);
      res.hit_beta.resize(jn);
      res.hit_m.resize(n_m_targets);
      std::vector<double> sq_theta_part(n), sq_beta_part(jn);
      for (std::int64_t i = 0; i < n; ++i) {
        const double err = est.theta[i] - truth.theta[i];
        sq_theta_part[i] = err * err;
        const double se = std::sqrt(1.0 / sig_hat.row[i]);
        res.hit_theta[i] = std::fabs(err) <= zq * se ? 1 : 0;
      }
      for (std::int64_t j = 0; j < jn; ++j) {
        const double err = est.beta[j] - truth.beta[j];
        sq_beta_part[j] = err * err;
        const double se = std::sqrt(1.0 / sig_hat.col[j]);
        res.hit_beta[j] = std::fabs(err) <= zq * se ? 1 : 0;
      }
      res.sq_theta = pairwise_sum(sq_theta_part);
      res.sq_beta = pairwise_sum(sq_beta_part);

      std::vector<double> sq_m_part(n_obs);
      for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
          const std::int64_t j = col_idx[k];
          const double err = (est.theta[i] - est.beta[j]) -
                             (truth.theta[i] - truth.beta[j]);
          sq_m_part[k] = err * err;
        }
      }
      res.sq_m = pairwise_sum(sq_m_part);
      for (std::int64_t t = 0; t < n_m_targets; ++t) {
        const std::int64_t k = m_target_cells[t];
        const std::int32_t i = cell_row[k];
        const std::int32_t j = col_idx[k];
        const double err =
            (est.theta[i] - est.beta[j]) - (truth.theta[i] - truth.beta[j]);
        const double se = std::sqrt(1.0 / sig_hat.row[i] + 1.0 / sig_hat.col[j]);
        res.hit_m[t] = std::fabs(err) <= zq * se ? 1 : 0;
      }

      res.var_target_est.resize(var_targets.size());
      res.var_target_plugin.resize(var_targets.size());
      for (std::size_t t = 0; t < var_targets.size(); ++t) {
        const Target& tg = var_targets[t];
        if (tg.kind == 'm') {
          res.var_target_est[t] = est.theta[tg.i] - est.beta[tg.j];
          res.var_target_plugin[t] = 1.0 / sig_hat.row[tg.i] + 1.0 / sig_hat.col[tg.j];
        } else if (tg.kind == 't') {
          res.var_target_est[t] = est.theta[tg.i];
          res.var_target_plugin[t] = 1.0 / sig_hat.row[tg.i];
        } else {
          res.var_target_est[t] = est.beta[tg.j];
          res.var_target_plugin[t] = 1.0 / sig_hat.col[tg.j];
        }
      }
      res.est_theta0 = est.theta[0];
      res.est_beta0 = est.beta[0];
      res.est_m00 = est.theta[0] - est.beta[0];
      res.ok = true;
    } catch (const std::exception& e) {
      log::warn("replication %zu excluded: %s", r, e.what());
      res.ok = false;
    }
  });

  CoverageReport report;
  report.truth = truth;
  report.level = config.level;
  report.replications_requested = reps;
  report.m_targets.resize(n_m_targets);
  for (std::int64_t t = 0; t < n_m_targets; ++t) {
    const std::int64_t k = m_target_cells[t];
    report.m_targets[t] = {cell_row[k], col_idx[k]};
  }

  std::vector<std::int64_t> cnt_m(n_m_targets, 0), cnt_t(n, 0), cnt_b(jn, 0);
  std::vector<double> sq_m, sq_t, sq_b;
  std::vector<std::vector<double>> target_est(var_targets.size());
  std::vector<std::vector<double>> target_plug(var_targets.size());
  for (std::int32_t r = 0; r < reps; ++r) {
    const RepResult& res = results[r];
    if (!res.ok) {
      ++report.excluded;
      continue;
    }
    ++report.replications_used;
    for (std::int64_t t = 0; t < n_m_targets; ++t) cnt_m[t] += res.hit_m[t];
    for (std::int64_t i = 0; i < n; ++i) cnt_t[i] += res.hit_theta[i];
    for (std::int64_t j = 0; j < jn; ++j) cnt_b[j] += res.hit_beta[j];
    sq_m.push_back(res.sq_m);
    sq_t.push_back(res.sq_theta);
    sq_b.push_back(res.sq_beta);
    for (std::size_t t = 0; t < var_targets.size(); ++t) {
      target_est[t].push_back(res.var_target_est[t]);
      target_plug[t].push_back(res.var_target_plugin[t]);
    }
    report.est_m00.push_back(res.est_m00);
    report.est_theta0.push_back(res.est_theta0);
    report.est_beta0.push_back(res.est_beta0);
  }

  if (report.excluded * 100 > reps) {
    throw NumericError("study failed: " + std::to_string(report.excluded) + " of " +
                       std::to_string(reps) + " replications excluded (> 1%)");
  }
  if (report.replications_used == 0) {
    throw NumericError("study failed: no usable replications");
  }
  const double used = static_cast<double>(report.replications_used);

  report.coverage_m.resize(n_m_targets);
  for (std::int64_t t = 0; t < n_m_targets; ++t) {
    report.coverage_m[t] = static_cast<double>(cnt_m[t]) / used;
  }
  report.coverage_theta.resize(n);
  for (std::int64_t i = 0; i < n; ++i) {
    report.coverage_theta[i] = static_cast<double>(cnt_t[i]) / used;
  }
  report.coverage_beta.resize(jn);
  for (std::int64_t j = 0; j < jn; ++j) {
    report.coverage_beta[j] = static_cast<double>(cnt_b[j]) / used;
  }
  report.mse_m = pairwise_sum(sq_m) / (used * static_cast<double>(n_obs));
  report.mse_theta = pairwise_sum(sq_t) / (used * static_cast<double>(n));
  report.mse_beta = pairwise_sum(sq_b) / (used * static_cast<double>(jn));

  report.variance_table.resize(var_targets.size());
  for (std::size_t t = 0; t < var_targets.size(); ++t) {
    VarianceTableRow& row = report.variance_table[t];
    const Target& tg = var_targets[t];
    row.kind = tg.kind;
    row.i = tg.i;
    row.j = tg.j;
    row.s2 = report.replications_used >= 2 ? sample_variance(target_est[t]) : 0.0;
    row.sigma_bar2 = pairwise_sum(target_plug[t]) / used;
    if (tg.kind == 'm') {
      row.sigma_tilde2 = 1.0 / sigma_true.row[tg.i] + 1.0 / sigma_true.col[tg.j];
    } else if (tg.kind == 't') {
      row.sigma_tilde2 = 1.0 / sigma_true.row[tg.i];
    } else {
      row.sigma_tilde2 = 1.0 / sigma_true.col[tg.j];
    }
  }
  report.tilde_var_m00 = 1.0 / sigma_true.row[0] + 1.0 / sigma_true.col[0];
  report.tilde_var_theta0 = 1.0 / sigma_true.row[0];
  report.tilde_var_beta0 = 1.0 / sigma_true.col[0];

  log::info("study: %d/%d replications used, mse(m,theta,beta) = %.4g %.4g %.4g",
            report.replications_used, reps, report.mse_m, report.mse_theta,
            report.mse_beta);
  return report;
}

}  // namespace bitmat
