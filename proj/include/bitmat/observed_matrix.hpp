#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bitmat {

struct Entry {
  std::int32_t row = 0;
  std::int32_t col = 0;
  std::uint8_t value = 0;  // 0 or 1
};

struct DesignStats {
  std::int64_t j_star_min = 0;  // min observed entries per row
  std::int64_t j_star_max = 0;  // max observed entries per row
  std::int64_t n_star_min = 0;  // min observed entries per column
  std::int64_t n_star_max = 0;  // max observed entries per column
  double missing_fraction = 0.0;
};

// Partially observed binary matrix, stored as a sorted coordinate list with
// row ranges (CSR) plus a column-major view (CSC) over the same cells, so
// both row sweeps and column sweeps walk contiguous memory. A dense N x J
// layout is deliberately not used: realistic designs are up to ~40% missing
// and N*J need not fit.
class ObservedBinaryMatrix {
 public:
  ObservedBinaryMatrix(std::int64_t n_rows, std::int64_t n_cols,
                       std::vector<Entry> entries);

  std::int64_t n_rows() const { return n_rows_; }
  std::int64_t n_cols() const { return n_cols_; }
  std::int64_t n_observed() const { return static_cast<std::int64_t>(y_.size()); }

  // CSR view: cells of row i are [row_ptr(i), row_ptr(i+1)) in col_index/value.
  std::span<const std::int64_t> row_ptr() const { return row_ptr_; }
  std::span<const std::int32_t> col_index() const { return col_index_; }
  std::span<const std::uint8_t> values() const { return y_; }

  // CSC view: cells of column j are [col_ptr(j), col_ptr(j+1)) in row_index;
  // csr_pos maps each CSC slot back to its CSR position.
  std::span<const std::int64_t> col_ptr() const { return col_ptr_; }
  std::span<const std::int32_t> row_index() const { return row_index_; }
  std::span<const std::int64_t> csr_pos() const { return csr_pos_; }

  std::int64_t row_count(std::int64_t i) const {
    return row_ptr_[i + 1] - row_ptr_[i];
  }
  std::int64_t col_count(std::int64_t j) const {
    return col_ptr_[j + 1] - col_ptr_[j];
  }

  DesignStats design_stats() const;

  // Rows (columns) whose observed values are all equal; the MLE for such a
  // margin does not exist (theta or beta walks off to +-infinity).
  std::vector<std::int32_t> degenerate_rows() const;
  std::vector<std::int32_t> degenerate_cols() const;

  // Reconstructs the coordinate list (row-major order).
  std::vector<Entry> entries() const;

 private:
  std::int64_t n_rows_;
  std::int64_t n_cols_;
  std::vector<std::int64_t> row_ptr_;
  std::vector<std::int32_t> col_index_;
  std::vector<std::uint8_t> y_;
  std::vector<std::int64_t> col_ptr_;
  std::vector<std::int32_t> row_index_;
  std::vector<std::int64_t> csr_pos_;
};

// Row effects theta (length N) and column effects beta (length J), both in
// log-odds units; m_ij = theta_i - beta_j.
struct ModelParams {
  std::vector<double> theta;
  std::vector<double> beta;

  std::int64_t n_rows() const { return static_cast<std::int64_t>(theta.size()); }
  std::int64_t n_cols() const { return static_cast<std::int64_t>(beta.size()); }
};

// Subtracts mean(theta) from every theta_i and every beta_j. Leaves every
// m_ij untouched and makes sum(theta) = 0.
ModelParams center(const ModelParams& params);

// Adds the same constant to all coordinates (a pure location shift; the
// likelihood cannot see it).
ModelParams shift(const ModelParams& params, double c);

}  // namespace bitmat
