#include <CLI11.hpp>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "bitmat/connectivity.hpp"
#include "bitmat/errors.hpp"
#include "bitmat/estimator.hpp"
#include "bitmat/inference.hpp"
#include "bitmat/io.hpp"
#include "bitmat/logging.hpp"
#include "bitmat/simulation.hpp"

namespace {

using namespace bitmat;

constexpr int kExitParse = 2;
constexpr int kExitIdentifiability = 3;
constexpr int kExitNumeric = 4;

struct FitFlags {
  std::string input;
  std::string output;
  std::optional<std::string> meta;
  std::uint64_t seed = 0;
  double gamma = 0.0;  // 0 = auto
  double tol = 0.0;    // 0 = auto
  double grad_tol = 1e-6;
  int max_sweeps = 10000;
  double init_width = 1.0;
  bool allow_disconnected = false;
};

FitConfig to_config(const FitFlags& f) {
  FitConfig c;
  if (f.gamma > 0.0) c.learning_rate = f.gamma;
  if (f.tol > 0.0) c.tol = f.tol;
  c.grad_tol = f.grad_tol;
  c.max_sweeps = f.max_sweeps;
  c.init_half_width = f.init_width;
  c.seed = f.seed;
  c.allow_disconnected = f.allow_disconnected;
  return c;
}

int cmd_fit(const FitFlags& flags) {
  const io::MatrixData data = io::load_matrix_csv(flags.input, flags.meta);
  if (!flags.allow_disconnected) {
    const ConnectivityReport conn = check_connectivity(data.matrix);
    if (!conn.connected) {
      std::string msg = "design is disconnected; components:";
      for (std::size_t c = 0; c < conn.components.size() && c < 8; ++c) {
        msg += " {";
        for (std::size_t v = 0; v < conn.components[c].size() && v < 12; ++v) {
          const std::int32_t node = conn.components[c][v];
          msg += (v ? "," : "");
          if (node < data.matrix.n_rows()) {
            msg += "r" + std::to_string(node);
          } else {
            msg += "c" + std::to_string(node - data.matrix.n_rows());
          }
        }
        if (conn.components[c].size() > 12) msg += ",...";
        msg += "}";
      }
      throw IdentifiabilityError(msg);
    }
  }
  const FitReport report = fit(data.matrix, to_config(flags));
  const io::FitFile file = io::make_fit_file(report, data.matrix, data.labels);
  io::save_fit_json(flags.output, file);
  std::printf("fit: %lld x %lld, %lld observed (missing fraction %.4g)\n",
              static_cast<long long>(file.n_rows), static_cast<long long>(file.n_cols),
              static_cast<long long>(file.n_observed), file.stats.missing_fraction);
  std::printf("fit: loglik %.6f after %d sweeps, converged=%s, grad max %.3e\n",
              file.final_loglik, file.sweeps, file.converged ? "yes" : "no",
              file.grad_max_norm);
  std::printf("fit: diagnostics N_*(log N)^2/J_*^2 = %.4g, (log N)/J_* = %.4g\n",
              file.diagnostics.jstar2_nstar_log2, file.diagnostics.log_n_over_jstar);
  return 0;
}

std::int64_t resolve_label(const std::string& token, const std::vector<std::string>& labels,
                           std::int64_t n, const char* what) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == token) return static_cast<std::int64_t>(i);
  }
  // Fall back to a numeric index.
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(token, &pos);
    if (pos == token.size() && v >= 0 && v < n) return v;
  } catch (...) {
  }
  throw ParseError(std::string("unknown ") + what + " '" + token + "'");
}

int cmd_infer(const std::string& fit_path, const std::optional<std::string>& input,
              const std::vector<std::string>& form_specs, double level,
              const std::string& method_name, const std::string& output) {
  const io::FitFile fit = io::load_fit_json(fit_path);
  const VarianceMethod method = variance_method_from_string(method_name);
  ModelParams params{fit.theta, fit.beta};

  // Main-method inference runs off the stored sigma aggregates; the refined
  // and exact methods need the per-cell pattern, i.e. the original matrix.
  std::optional<io::MatrixData> data;
  if (input.has_value()) {
    data = io::load_matrix_csv(*input);
  } else if (method == VarianceMethod::refined || method == VarianceMethod::exact_oracle) {
    throw ParseError("--method refined/exact needs --input (the data file)");
  }

  SigmaStats sigma;
  if (data.has_value()) {
    sigma = sigma_stats(params, data->matrix);
  } else {
    sigma.row = fit.sigma_row;
    sigma.col = fit.sigma_col;
    sigma.total = 0.0;
    for (double v : sigma.row) sigma.total += v;
  }

  const std::int64_t n = fit.n_rows, jn = fit.n_cols;
  std::vector<io::InferenceRow> rows;
  for (const std::string& spec : form_specs) {
    std::vector<std::string> tok;
    {
      std::string cur;
      for (char c : spec) {
        if (c == ' ') {
          if (!cur.empty()) tok.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      if (!cur.empty()) tok.push_back(cur);
    }
    if (tok.empty()) throw ParseError("empty form spec");
    LinearForm g = LinearForm::from_coefficients(std::vector<double>(n, 0.0),
                                                 std::vector<double>(jn, 0.0));
    const bool projected =
        method == VarianceMethod::refined || method == VarianceMethod::exact_oracle;
    if (tok[0] == "entry" && tok.size() == 3) {
      const std::int64_t i = resolve_label(tok[1], fit.labels.rows, n, "row");
      const std::int64_t j = resolve_label(tok[2], fit.labels.cols, jn, "column");
      g = LinearForm::entry(i, j, n, jn);
    } else if (tok[0] == "row" && tok.size() == 2) {
      const std::int64_t i = resolve_label(tok[1], fit.labels.rows, n, "row");
      g = projected ? LinearForm::row_effect_projected(i, n, jn)
                    : LinearForm::row_coefficient(i, n, jn);
    } else if (tok[0] == "col" && tok.size() == 2) {
      const std::int64_t j = resolve_label(tok[1], fit.labels.cols, jn, "column");
      g = projected ? LinearForm::col_effect_projected(j, n, jn)
                    : LinearForm::col_coefficient(j, n, jn);
    } else if (tok[0] == "rowdiff" && tok.size() == 3) {
      const std::int64_t i = resolve_label(tok[1], fit.labels.rows, n, "row");
      const std::int64_t k = resolve_label(tok[2], fit.labels.rows, n, "row");
      if (i == k) throw ParseError("rowdiff needs two distinct rows");
      g = LinearForm::row_difference(i, k, n, jn);
    } else if (tok[0] == "weights" && tok.size() == 2) {
      g = io::load_weights_json(tok[1], n, jn);
    } else {
      throw ParseError("cannot parse form spec '" + spec +
                       "' (expected: entry i j | row i | col j | rowdiff i k | weights file)");
    }
    InferenceResult res;
    if (data.has_value()) {
      res = wald_interval(g, params, sigma, data->matrix, level, method);
    } else {
      const VarianceEstimate v = variance_main(g, sigma, VarianceMethod::plug_in);
      res = wald_from_estimate(evaluate_form(g, params), std::sqrt(v.value), level);
      res.variance = v;
    }
    rows.push_back(io::InferenceRow{spec, res});
  }
  const std::string csv = io::inference_csv(rows);
  if (output.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    io::write_file(output, csv);
  }
  return 0;
}

int cmd_rank(const std::string& fit_path, std::int64_t top, const std::string& direction,
             const std::string& output) {
  const io::FitFile fit = io::load_fit_json(fit_path);
  if (direction != "desc" && direction != "asc") {
    throw ParseError("--direction must be 'desc' or 'asc'");
  }
  const std::string csv = io::ranking_csv(fit, top, direction == "desc");
  if (output.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    io::write_file(output, csv);
  }
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& prefix) {
  const SimStudyConfig cfg = io::load_study_config(config_path);
  const ModelParams truth = draw_parameters(cfg.n_rows, cfg.n_cols, cfg.seed, 0);
  const MissingDesign design = make_explicit_design(
      cfg.n_rows, cfg.n_cols, cfg.design.cells(cfg.seed, 0));
  const ObservedBinaryMatrix matrix = simulate_matrix(truth, design, cfg.seed, 1);
  io::save_matrix_csv(prefix + ".csv", matrix);
  io::save_meta_json(io::sidecar_meta_path(prefix + ".csv"), cfg.n_rows, cfg.n_cols, {});
  std::string truth_json = "{\"beta\":[";
  for (std::size_t j = 0; j < truth.beta.size(); ++j) {
    truth_json += (j ? "," : "") + io::format_double(truth.beta[j]);
  }
  truth_json += "],\"theta\":[";
  for (std::size_t i = 0; i < truth.theta.size(); ++i) {
    truth_json += (i ? "," : "") + io::format_double(truth.theta[i]);
  }
  truth_json += "]}\n";
  io::write_file(prefix + "_truth.json", truth_json);
  const DesignStats stats = matrix.design_stats();
  std::printf("simulate: wrote %s.csv (%lld observed, missing fraction %.4g)\n",
              prefix.c_str(), static_cast<long long>(matrix.n_observed()),
              stats.missing_fraction);
  return 0;
}

int cmd_coverage(const std::string& config_path, const std::string& prefix, int threads) {
  SimStudyConfig cfg = io::load_study_config(config_path);
  if (threads > 0) cfg.threads = threads;
  const CoverageReport report = run_study(cfg);
  io::write_coverage_outputs(prefix, report);
  std::printf("coverage: %d/%d replications used (%d excluded)\n",
              report.replications_used, report.replications_requested, report.excluded);
  std::printf("coverage: mse m=%.6g theta=%.6g beta=%.6g\n", report.mse_m,
              report.mse_theta, report.mse_beta);
  return 0;
}

int cmd_rollcall(const std::string& input, const std::string& output,
                 const std::string& audit_path, int min_service_days,
                 const std::string& party_a, const std::string& party_b) {
  const io::RollCallPrep prep =
      io::preprocess_rollcall(input, min_service_days, party_a, party_b);
  ObservedBinaryMatrix matrix(static_cast<std::int64_t>(prep.labels.rows.size()),
                              static_cast<std::int64_t>(prep.labels.cols.size()),
                              prep.entries);
  io::save_matrix_csv(output, matrix);
  io::save_meta_json(io::sidecar_meta_path(output), matrix.n_rows(), matrix.n_cols(),
                     prep.labels);
  std::string audit_text;
  for (const std::string& line : prep.audit) {
    audit_text += line;
    audit_text += '\n';
  }
  if (!audit_path.empty()) io::write_file(audit_path, audit_text);
  const DesignStats stats = matrix.design_stats();
  std::printf("rollcall-prep: N=%lld senators, J=%lld bills, missing fraction %.4g\n",
              static_cast<long long>(matrix.n_rows()),
              static_cast<long long>(matrix.n_cols()), stats.missing_fraction);
  std::printf(
      "rollcall-prep: dropped %lld senators (service), %lld bills (empty), %lld bills "
      "(constant), %lld bills (tie), %lld bills (unorientable), %lld senators (empty)\n",
      static_cast<long long>(prep.senators_dropped_service),
      static_cast<long long>(prep.bills_dropped_empty),
      static_cast<long long>(prep.bills_dropped_constant),
      static_cast<long long>(prep.bills_dropped_tie),
      static_cast<long long>(prep.bills_dropped_unorientable),
      static_cast<long long>(prep.senators_dropped_empty));
  return 0;
}

int cmd_make_design(const std::string& kind, std::int64_t rows, std::int64_t cols,
                    double rate, std::uint64_t seed, const std::string& output) {
  MissingDesign design;
  if (kind == "block") {
    design = make_block_design(rows, cols);
  } else if (kind == "full") {
    design = make_full_design(rows, cols);
  } else if (kind == "bernoulli") {
    design = make_bernoulli_design(rows, cols, rate);
  } else {
    throw ParseError("--kind must be block, full or bernoulli");
  }
  const auto cells = design.cells(seed, 0);
  std::string out = "i,j\n";
  for (const auto& [i, j] : cells) {
    out += std::to_string(i);
    out += ',';
    out += std::to_string(j);
    out += '\n';
  }
  io::write_file(output, out);
  const DesignStats stats = design_stats(rows, cols, cells);
  std::printf(
      "make-design: %s %lldx%lld, J_*=%lld J*=%lld N_*=%lld N*=%lld, missing %.4g\n",
      kind.c_str(), static_cast<long long>(rows), static_cast<long long>(cols),
      static_cast<long long>(stats.j_star_min), static_cast<long long>(stats.j_star_max),
      static_cast<long long>(stats.n_star_min), static_cast<long long>(stats.n_star_max),
      stats.missing_fraction);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bitmat: row/column-effect logistic factor model for 1-bit matrices"};
  app.require_subcommand(1);

  FitFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "fit the model to an i,j,y CSV");
  fit_cmd->add_option("--input", fit_flags.input, "observed-matrix CSV")->required();
  fit_cmd->add_option("--output", fit_flags.output, "fit JSON output path")->required();
  std::string meta_override;
  fit_cmd->add_option("--meta", meta_override, "sidecar meta.json path override");
  fit_cmd->add_option("--seed", fit_flags.seed, "initialization seed");
  fit_cmd->add_option("--gamma", fit_flags.gamma, "learning rate (default 1/max(N*,J*))");
  fit_cmd->add_option("--tol", fit_flags.tol, "loglik improvement tolerance (default 1e-8*n_obs)");
  fit_cmd->add_option("--grad-tol", fit_flags.grad_tol, "gradient max-norm tolerance");
  fit_cmd->add_option("--max-sweeps", fit_flags.max_sweeps, "sweep budget");
  fit_cmd->add_option("--init-width", fit_flags.init_width, "Uniform(-c,c) init half-width");
  fit_cmd->add_flag("--allow-disconnected", fit_flags.allow_disconnected,
                    "fit even if the design is not identified");

  std::string infer_fit, infer_input_s, infer_method = "plugin", infer_output;
  std::vector<std::string> infer_forms;
  double infer_level = 0.95;
  auto* infer_cmd = app.add_subcommand("infer", "Wald inference for linear forms");
  infer_cmd->add_option("--fit", infer_fit, "fit JSON from the fit command")->required();
  infer_cmd->add_option("--input", infer_input_s, "data CSV (needed for refined/exact)");
  infer_cmd->add_option("--form", infer_forms,
                        "form spec: 'entry i j' | 'row i' | 'col j' | 'rowdiff i k' | "
                        "'weights file.json' (labels resolve too)")
      ->required();
  infer_cmd->add_option("--level", infer_level, "confidence level");
  infer_cmd->add_option("--method", infer_method, "plugin|true|refined|exact");
  infer_cmd->add_option("--output", infer_output, "CSV output (default stdout)");

  std::string rank_fit, rank_direction = "desc", rank_output;
  std::int64_t rank_top = 10;
  auto* rank_cmd = app.add_subcommand("rank", "rank rows by fitted effect");
  rank_cmd->add_option("--fit", rank_fit, "fit JSON")->required();
  rank_cmd->add_option("--top", rank_top, "number of rows to emit");
  rank_cmd->add_option("--direction", rank_direction, "desc|asc");
  rank_cmd->add_option("--output", rank_output, "CSV output (default stdout)");

  std::string sim_config, sim_prefix;
  auto* sim_cmd = app.add_subcommand("simulate", "generate one synthetic dataset");
  sim_cmd->add_option("--config", sim_config, "study config JSON")->required();
  sim_cmd->add_option("--output", sim_prefix, "output prefix")->required();

  std::string cov_config, cov_prefix;
  int cov_threads = 0;
  auto* cov_cmd = app.add_subcommand("coverage", "run a coverage/variance study");
  cov_cmd->add_option("--config", cov_config, "study config JSON")->required();
  cov_cmd->add_option("--output", cov_prefix, "output prefix")->required();
  cov_cmd->add_option("--threads", cov_threads,
                      "replication parallelism (output is thread-count invariant)");

  std::string rc_input, rc_output, rc_audit, rc_party_a = "Rep", rc_party_b = "Dem";
  int rc_min_days = 183;
  auto* rc_cmd = app.add_subcommand("rollcall-prep", "preprocess roll-call votes");
  rc_cmd->add_option("--input", rc_input, "votes CSV")->required();
  rc_cmd->add_option("--output", rc_output, "matrix CSV output")->required();
  rc_cmd->add_option("--audit", rc_audit, "audit log output path");
  rc_cmd->add_option("--min-service-days", rc_min_days, "service-span threshold");
  rc_cmd->add_option("--party-a", rc_party_a, "first party (Y=1 on Yea when it leads)");
  rc_cmd->add_option("--party-b", rc_party_b, "second party");

  std::string md_kind = "block", md_output;
  std::int64_t md_rows = 0, md_cols = 0;
  double md_rate = 0.5;
  std::uint64_t md_seed = 0;
  auto* md_cmd = app.add_subcommand("make-design", "emit a missingness mask");
  md_cmd->add_option("--kind", md_kind, "block|full|bernoulli");
  md_cmd->add_option("--rows", md_rows, "row count")->required();
  md_cmd->add_option("--cols", md_cols, "column count")->required();
  md_cmd->add_option("--rate", md_rate, "bernoulli observation rate");
  md_cmd->add_option("--seed", md_seed, "bernoulli mask seed");
  md_cmd->add_option("--output", md_output, "cells CSV output")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit_cmd->parsed()) {
      if (!meta_override.empty()) fit_flags.meta = meta_override;
      return cmd_fit(fit_flags);
    }
    if (infer_cmd->parsed()) {
      std::optional<std::string> input;
      if (!infer_input_s.empty()) input = infer_input_s;
      return cmd_infer(infer_fit, input, infer_forms, infer_level, infer_method,
                       infer_output);
    }
    if (rank_cmd->parsed()) return cmd_rank(rank_fit, rank_top, rank_direction, rank_output);
    if (sim_cmd->parsed()) return cmd_simulate(sim_config, sim_prefix);
    if (cov_cmd->parsed()) return cmd_coverage(cov_config, cov_prefix, cov_threads);
    if (rc_cmd->parsed()) {
      return cmd_rollcall(rc_input, rc_output, rc_audit, rc_min_days, rc_party_a,
                          rc_party_b);
    }
    if (md_cmd->parsed()) {
      return cmd_make_design(md_kind, md_rows, md_cols, md_rate, md_seed, md_output);
    }
  } catch (const bitmat::ParseError& e) {
    bitmat::log::error("%s", e.what());
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitParse;
  } catch (const bitmat::DimensionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitParse;
  } catch (const bitmat::IdentifiabilityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIdentifiability;
  } catch (const bitmat::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
