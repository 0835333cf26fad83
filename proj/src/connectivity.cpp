#include "bitmat/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bitmat/errors.hpp"

namespace bitmat {

namespace {

// Union-find with path compression and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(std::int64_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::int64_t{0});
  }

  std::int64_t find(std::int64_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::int64_t a, std::int64_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<std::int64_t> parent_;
  std::vector<std::int64_t> size_;
};

}  // namespace

ConnectivityReport check_connectivity(const ObservedBinaryMatrix& data) {
  const std::int64_t n = data.n_rows();
  const std::int64_t j = data.n_cols();
  DisjointSets sets(n + j);
  const auto row_ptr = data.row_ptr();
  const auto col = data.col_index();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      sets.unite(i, n + col[k]);
    }
  }

  ConnectivityReport report;
  std::vector<std::int64_t> root_of(n + j);
  std::vector<std::int32_t> comp_of(n + j, -1);
  for (std::int64_t v = 0; v < n + j; ++v) root_of[v] = sets.find(v);
  std::int32_t n_comp = 0;
  for (std::int64_t v = 0; v < n + j; ++v) {
    if (comp_of[root_of[v]] < 0) {
      comp_of[root_of[v]] = n_comp++;
      report.components.emplace_back();
    }
  }
  for (std::int64_t v = 0; v < n + j; ++v) {
    report.components[comp_of[root_of[v]]].push_back(static_cast<std::int32_t>(v));
  }
  for (auto& comp : report.components) std::sort(comp.begin(), comp.end());

  for (std::int64_t i = 0; i < n; ++i) {
    if (data.row_count(i) == 0) report.empty_rows.push_back(static_cast<std::int32_t>(i));
  }
  for (std::int64_t c = 0; c < j; ++c) {
    if (data.col_count(c) == 0) report.empty_cols.push_back(static_cast<std::int32_t>(c));
  }

  report.connected = (n_comp == 1);
  if (report.connected) return report;

  // Non-identifiability witness: shift every parameter in the first
  // component by a = 1 and everything else by -tau * a, with
  // tau = (#rows in the first component) / (#rows elsewhere). Observed m_ij
  // only ever pairs nodes of the same group, and sum(theta) stays zero. If
  // either side holds no rows, shifting only the row-free side's betas
  // already witnesses non-identifiability.
  std::int64_t rows_first = 0;
  for (std::int32_t v : report.components[0]) {
    if (v < n) ++rows_first;
  }
  const std::int64_t rows_rest = n - rows_first;
  report.witness_theta.assign(n, 0.0);
  report.witness_beta.assign(j, 0.0);
  double delta_first = 1.0, delta_rest;
  if (rows_first == 0) {
    delta_rest = 0.0;
  } else if (rows_rest == 0) {
    delta_first = 0.0;
    delta_rest = 1.0;
  } else {
    delta_rest = -static_cast<double>(rows_first) / static_cast<double>(rows_rest);
  }
  for (std::int64_t v = 0; v < n + j; ++v) {
    const double d = comp_of[root_of[v]] == 0 ? delta_first : delta_rest;
    if (v < n) {
      report.witness_theta[v] = d;
    } else {
      report.witness_beta[v - n] = d;
    }
  }
  return report;
}

ModelParams anchored_solve(const ObservedBinaryMatrix& data,
                           const std::vector<double>& m_values) {
  if (static_cast<std::int64_t>(m_values.size()) != data.n_observed()) {
    throw DimensionError("anchored_solve: m_values size " +
                         std::to_string(m_values.size()) +
                         " != observed cell count " +
                         std::to_string(data.n_observed()));
  }
  const std::int64_t n = data.n_rows();
  const std::int64_t j = data.n_cols();
  const auto row_ptr = data.row_ptr();
  const auto col_ptr = data.col_ptr();
  const auto col = data.col_index();
  const auto row = data.row_index();
  const auto csr_pos = data.csr_pos();

  // Potentials x over the bipartite graph: theta_i = x_i, beta_j = x_{N+j},
  // each observed cell fixes x_i - x_{N+j} = m_ij. BFS assigns potentials
  // along a spanning tree.
  std::vector<double> x(n + j, 0.0);
  std::vector<char> seen(n + j, 0);
  std::vector<std::int64_t> queue;
  queue.reserve(n + j);
  queue.push_back(0);
  seen[0] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::int64_t v = queue[head];
    if (v < n) {
      for (std::int64_t k = row_ptr[v]; k < row_ptr[v + 1]; ++k) {
        const std::int64_t w = n + col[k];
        if (!seen[w]) {
          seen[w] = 1;
          x[w] = x[v] - m_values[k];
          queue.push_back(w);
        }
      }
    } else {
      const std::int64_t c = v - n;
      for (std::int64_t k = col_ptr[c]; k < col_ptr[c + 1]; ++k) {
        const std::int64_t w = row[k];
        if (!seen[w]) {
          seen[w] = 1;
          x[w] = x[v] + m_values[csr_pos[k]];
          queue.push_back(w);
        }
      }
    }
  }
  if (static_cast<std::int64_t>(queue.size()) != n + j) {
    throw IdentifiabilityError(
        "anchored_solve requires a connected design; reached " +
        std::to_string(queue.size()) + " of " + std::to_string(n + j) + " nodes");
  }

  // Every off-tree cell closes a cycle whose alternating sum must vanish.
  double worst = 0.0;
  std::int64_t worst_row = -1, worst_col = -1;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const double resid = std::fabs(x[i] - x[n + col[k]] - m_values[k]);
      if (resid > worst) {
        worst = resid;
        worst_row = i;
        worst_col = col[k];
      }
    }
  }
  if (worst > 1e-8) {
    throw NumericError("anchored_solve: inconsistent m values, cycle residual " +
                       std::to_string(worst) + " at cell (" +
                       std::to_string(worst_row) + "," + std::to_string(worst_col) + ")");
  }

  ModelParams params;
  params.theta.assign(x.begin(), x.begin() + n);
  params.beta.assign(x.begin() + n, x.end());
  return center(params);
}

}  // namespace bitmat
