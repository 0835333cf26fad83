#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bitmat/estimator.hpp"
#include "bitmat/observed_matrix.hpp"

namespace bitmat {

// Missingness pattern generator. Every materialized mask must leave at least
// one observation in each row and column; violations throw rather than
// silently degrade.
struct MissingDesign {
  enum class Kind : std::uint8_t { full, block, bernoulli, explicit_mask };

  Kind kind = Kind::full;
  std::int64_t n_rows = 0;
  std::int64_t n_cols = 0;

  // block: mask of row_clusters x col_clusters, row-major; clusters evenly
  // sized.
  std::int32_t row_clusters = 0;
  std::int32_t col_clusters = 0;
  std::vector<std::uint8_t> block_mask;

  // bernoulli: each cell observed independently with this rate.
  double rate = 1.0;

  std::vector<std::pair<std::int32_t, std::int32_t>> explicit_cells;

  // Materializes the observed cells (row-major order). Only the bernoulli
  // kind consumes randomness.
  std::vector<std::pair<std::int32_t, std::int32_t>> cells(std::uint64_t seed = 0,
                                                           std::uint64_t stream = 0) const;
};

MissingDesign make_full_design(std::int64_t n_rows, std::int64_t n_cols);
MissingDesign make_bernoulli_design(std::int64_t n_rows, std::int64_t n_cols, double rate);
MissingDesign make_explicit_design(std::int64_t n_rows, std::int64_t n_cols,
                                   std::vector<std::pair<std::int32_t, std::int32_t>> cells);

// The five-by-four block-wise pattern: rows in five equal clusters, columns
// in four, each row cluster observing a distinct pair of column clusters.
// Requires n_rows % 5 == 0 and n_cols % 4 == 0. For (5000, 200) the derived
// stats are N_* = 2000, N* = 3000, J_* = J* = 100.
MissingDesign make_block_design(std::int64_t n_rows, std::int64_t n_cols);

// Design stats for a mask without values.
DesignStats design_stats(std::int64_t n_rows, std::int64_t n_cols,
                         const std::vector<std::pair<std::int32_t, std::int32_t>>& cells);

struct SimStudyConfig {
  std::int64_t n_rows = 0;
  std::int64_t n_cols = 0;
  MissingDesign design;
  std::int32_t replications = 1;
  std::uint64_t seed = 0;
  FitConfig fit;
  double level = 0.95;
  // How many targets of each kind enter the variance-comparison table.
  std::int32_t variance_targets_per_kind = 100;
  // Coverage is tracked for all theta, all beta, and the observed-support
  // m_ij; a nonnegative value subsamples the m targets to this many cells.
  std::int64_t m_target_sample = -1;
  int threads = 1;
};

// theta uniform over {sum x_i = 0, |x_i| <= 2} via iid Uniform(-2,2)
// proposals, mean-centering, and rejection while any coordinate escapes;
// beta iid Uniform(-2,2). The rejection loop is capped at 1e6 rounds.
ModelParams draw_parameters(std::int64_t n_rows, std::int64_t n_cols, std::uint64_t seed,
                            std::uint64_t stream = 0);

// y_ij ~ Bernoulli(logistic(theta_i - beta_j)) independently on the design's
// observed cells. Deterministic in (seed, stream).
ObservedBinaryMatrix simulate_matrix(const ModelParams& params,
                                     const MissingDesign& design,
                                     std::uint64_t seed, std::uint64_t stream = 0);

struct VarianceTableRow {
  char kind = 'm';  // 'm', 't' (theta), 'b' (beta)
  std::int32_t i = 0;
  std::int32_t j = 0;       // unused for theta/beta rows
  double s2 = 0.0;          // sample variance of g(M-hat) over replications
  double sigma_bar2 = 0.0;  // mean plug-in variance
  double sigma_tilde2 = 0.0;  // true-parameter variance formula
};

struct CoverageReport {
  ModelParams truth;
  double level = 0.95;
  std::int32_t replications_requested = 0;
  std::int32_t replications_used = 0;
  std::int32_t excluded = 0;

  std::vector<std::pair<std::int32_t, std::int32_t>> m_targets;
  std::vector<double> coverage_m;      // per m target
  std::vector<double> coverage_theta;  // length N
  std::vector<double> coverage_beta;   // length J

  double mse_m = 0.0;      // over all observed cells
  double mse_theta = 0.0;
  double mse_beta = 0.0;

  std::vector<VarianceTableRow> variance_table;

  // Per-replication estimates of the canonical targets m_00, theta_0,
  // beta_0, for density/histogram emission.
  std::vector<double> est_m00;
  std::vector<double> est_theta0;
  std::vector<double> est_beta0;
  double tilde_var_m00 = 0.0;
  double tilde_var_theta0 = 0.0;
  double tilde_var_beta0 = 0.0;
};

// Runs the full study: truth drawn once, `replications` independent data
// sets, each fitted and evaluated. Replications run on `threads` workers;
// results are aggregated in replication order, so the report is bitwise
// identical for any thread count. Replications whose fit throws or produces
// non-finite output are excluded and counted; more than 1% exclusions fails
// the study.
CoverageReport run_study(const SimStudyConfig& config);

}  // namespace bitmat
