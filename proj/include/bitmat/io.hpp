#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bitmat/estimator.hpp"
#include "bitmat/inference.hpp"
#include "bitmat/observed_matrix.hpp"
#include "bitmat/simulation.hpp"

namespace bitmat::io {

struct Labels {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  bool empty() const { return rows.empty() && cols.empty(); }
};

struct MatrixData {
  ObservedBinaryMatrix matrix;
  Labels labels;
};

// 17-significant-digit float formatting used across every emitted file; this
// round-trips doubles exactly, so reload + re-emit is byte-identical.
std::string format_double(double x);

// `i,j,y` CSV with 0-based indices. Dimensions and labels come from the
// sidecar `<stem>.meta.json` when present; otherwise dimensions are inferred
// from the largest indices.
MatrixData load_matrix_csv(const std::string& csv_path,
                           const std::optional<std::string>& meta_path = std::nullopt);
void save_matrix_csv(const std::string& csv_path, const ObservedBinaryMatrix& matrix);
void save_meta_json(const std::string& meta_path, std::int64_t n_rows,
                    std::int64_t n_cols, const Labels& labels);
std::string sidecar_meta_path(const std::string& csv_path);

// Fitted-model file (canonical JSON: keys sorted, floats at 17 significant
// digits, "\n" line endings).
struct FitFile {
  std::int64_t n_rows = 0;
  std::int64_t n_cols = 0;
  std::int64_t n_observed = 0;
  std::vector<double> theta;
  std::vector<double> beta;
  std::vector<double> sigma_row;  // plug-in sigma^2_{i+}
  std::vector<double> sigma_col;  // plug-in sigma^2_{+j}
  Labels labels;
  double final_loglik = 0.0;
  std::int32_t sweeps = 0;
  bool converged = false;
  std::string stop_reason;
  double grad_max_norm = 0.0;
  std::vector<double> loglik_trace;
  std::vector<std::int32_t> degenerate_rows;
  std::vector<std::int32_t> degenerate_cols;
  DesignStats stats;
  InferenceDiagnostics diagnostics;
};

FitFile make_fit_file(const FitReport& report, const ObservedBinaryMatrix& data,
                      const Labels& labels);
std::string fit_file_json(const FitFile& f);
void save_fit_json(const std::string& path, const FitFile& f);
FitFile load_fit_json(const std::string& path);

// Roll-call preprocessing (votes CSV with header senator,party,bill,vote,date;
// vote in {Yea, Nay, Absent}; Absent means missing). Steps, in order:
//   1. drop senators whose service span is below the threshold;
//   2. drop bills with no observed votes, then bills whose observed votes are
//      all the same (their MLE would not exist);
//   3. orient each remaining bill by within-party support among voting
//      members: the leading party's Yea (or, for party_b, Nay) becomes Y = 1;
//      equal support or a party with no votes leaves the bill unorientable
//      and drops it;
//   4. drop senators left with no observed entries.
struct RollCallPrep {
  std::vector<Entry> entries;
  Labels labels;  // rows = senators, cols = bills
  std::vector<std::string> audit;
  std::int64_t senators_dropped_service = 0;
  std::int64_t bills_dropped_empty = 0;         // zero non-missing votes
  std::int64_t bills_dropped_constant = 0;      // all observed votes equal
  std::int64_t bills_dropped_tie = 0;
  std::int64_t bills_dropped_unorientable = 0;  // a party cast no votes
  std::int64_t senators_dropped_empty = 0;
};

RollCallPrep preprocess_rollcall(const std::string& csv_path,
                                 int min_service_days = 183,
                                 const std::string& party_a = "Rep",
                                 const std::string& party_b = "Dem");

// Study configuration JSON for the simulate/coverage commands.
SimStudyConfig load_study_config(const std::string& path);

// Inference output rows.
struct InferenceRow {
  std::string form;
  InferenceResult result;
};
std::string inference_csv(const std::vector<InferenceRow>& rows);

// Ranking table (rank,label,estimate,se), sorted by estimate with label
// order breaking ties.
std::string ranking_csv(const FitFile& fit, std::int64_t top, bool descending);

// Coverage-study emission: variance pairs, density histogram bins, per-target
// coverage, and a JSON summary. Paths get `_variance_pairs.csv`,
// `_density_bins.csv`, `_coverage.csv`, `_summary.json` suffixes.
void write_coverage_outputs(const std::string& prefix, const CoverageReport& report);

// Weights-file form: {"theta": [...], "beta": [...]} or
// {"entries": [[i, j, w], ...]} (the latter carries origin margins).
LinearForm load_weights_json(const std::string& path, std::int64_t n_rows,
                             std::int64_t n_cols);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace bitmat::io
