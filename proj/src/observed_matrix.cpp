#include "bitmat/observed_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "bitmat/errors.hpp"
#include "bitmat/stats.hpp"

namespace bitmat {

ObservedBinaryMatrix::ObservedBinaryMatrix(std::int64_t n_rows,
                                           std::int64_t n_cols,
                                           std::vector<Entry> entries)
    : n_rows_(n_rows), n_cols_(n_cols) {
  if (n_rows <= 0 || n_cols <= 0) {
    throw DimensionError("matrix dimensions must be positive");
  }
  for (const Entry& e : entries) {
    if (e.row < 0 || e.row >= n_rows || e.col < 0 || e.col >= n_cols) {
      throw DimensionError("entry (" + std::to_string(e.row) + "," +
                           std::to_string(e.col) + ") out of range for " +
                           std::to_string(n_rows) + "x" + std::to_string(n_cols));
    }
    if (e.value > 1) {
      throw ParseError("entry value must be 0 or 1");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].row == entries[k - 1].row &&
        entries[k].col == entries[k - 1].col) {
      throw ParseError("duplicate entry at (" + std::to_string(entries[k].row) +
                       "," + std::to_string(entries[k].col) + ")");
    }
  }

  const std::int64_t nnz = static_cast<std::int64_t>(entries.size());
  row_ptr_.assign(n_rows + 1, 0);
  col_index_.resize(nnz);
  y_.resize(nnz);
  for (std::int64_t k = 0; k < nnz; ++k) {
    ++row_ptr_[entries[k].row + 1];
    col_index_[k] = entries[k].col;
    y_[k] = entries[k].value;
  }
  for (std::int64_t i = 0; i < n_rows; ++i) row_ptr_[i + 1] += row_ptr_[i];

  col_ptr_.assign(n_cols + 1, 0);
  for (std::int64_t k = 0; k < nnz; ++k) ++col_ptr_[col_index_[k] + 1];
  for (std::int64_t j = 0; j < n_cols; ++j) col_ptr_[j + 1] += col_ptr_[j];
  row_index_.resize(nnz);
  csr_pos_.resize(nnz);
  std::vector<std::int64_t> cursor(col_ptr_.begin(), col_ptr_.end() - 1);
  for (std::int64_t i = 0; i < n_rows; ++i) {
    for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::int64_t slot = cursor[col_index_[k]]++;
      row_index_[slot] = static_cast<std::int32_t>(i);
      csr_pos_[slot] = k;
    }
  }
}

DesignStats ObservedBinaryMatrix::design_stats() const {
  DesignStats s;
  s.j_star_min = n_cols_;
  s.j_star_max = 0;
  for (std::int64_t i = 0; i < n_rows_; ++i) {
    s.j_star_min = std::min(s.j_star_min, row_count(i));
    s.j_star_max = std::max(s.j_star_max, row_count(i));
  }
  s.n_star_min = n_rows_;
  s.n_star_max = 0;
  for (std::int64_t j = 0; j < n_cols_; ++j) {
    s.n_star_min = std::min(s.n_star_min, col_count(j));
    s.n_star_max = std::max(s.n_star_max, col_count(j));
  }
  s.missing_fraction = 1.0 - static_cast<double>(n_observed()) /
                                 (static_cast<double>(n_rows_) *
                                  static_cast<double>(n_cols_));
  return s;
}

std::vector<std::int32_t> ObservedBinaryMatrix::degenerate_rows() const {
  std::vector<std::int32_t> out;
  for (std::int64_t i = 0; i < n_rows_; ++i) {
    const std::int64_t lo = row_ptr_[i], hi = row_ptr_[i + 1];
    if (lo == hi) continue;
    bool all_same = true;
    for (std::int64_t k = lo + 1; k < hi; ++k) {
      if (y_[k] != y_[lo]) {
        all_same = false;
        break;
      }
    }
    if (all_same) out.push_back(static_cast<std::int32_t>(i));
  }
  return out;
}

std::vector<std::int32_t> ObservedBinaryMatrix::degenerate_cols() const {
  std::vector<std::int32_t> out;
  for (std::int64_t j = 0; j < n_cols_; ++j) {
    const std::int64_t lo = col_ptr_[j], hi = col_ptr_[j + 1];
    if (lo == hi) continue;
    bool all_same = true;
    for (std::int64_t k = lo + 1; k < hi; ++k) {
      if (y_[csr_pos_[k]] != y_[csr_pos_[lo]]) {
        all_same = false;
        break;
      }
    }
    if (all_same) out.push_back(static_cast<std::int32_t>(j));
  }
  return out;
}

std::vector<Entry> ObservedBinaryMatrix::entries() const {
  std::vector<Entry> out;
  out.reserve(y_.size());
  for (std::int64_t i = 0; i < n_rows_; ++i) {
    for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      out.push_back(Entry{static_cast<std::int32_t>(i), col_index_[k], y_[k]});
    }
  }
  return out;
}

ModelParams center(const ModelParams& params) {
  ModelParams out = params;
  if (out.theta.empty()) return out;
  const double mean =
      pairwise_sum(out.theta) / static_cast<double>(out.theta.size());
  for (double& t : out.theta) t -= mean;
  for (double& b : out.beta) b -= mean;
  return out;
}

ModelParams shift(const ModelParams& params, double c) {
  ModelParams out = params;
  for (double& t : out.theta) t += c;
  for (double& b : out.beta) b += c;
  return out;
}

}  // namespace bitmat
