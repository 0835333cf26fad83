#pragma once

#include <vector>

#include "bitmat/observed_matrix.hpp"

namespace bitmat {

// Identifiability report for a missingness pattern. Nodes 0..N-1 are rows,
// N..N+J-1 are columns; every observed cell (i,j) is an edge. (theta, beta)
// with sum(theta) = 0 are identified from the observed m_ij exactly when this
// bipartite graph is a single connected component covering every row and
// column. Rows/columns with no observations form singleton components; they
// are reported, never dropped.
struct ConnectivityReport {
  bool connected = false;
  std::vector<std::vector<std::int32_t>> components;  // node ids, sorted
  // When disconnected: a non-identifiability witness. Relative to any
  // (theta, beta), the parameters theta_i + witness_theta[i],
  // beta_j + witness_beta[j] keep sum(theta) = 0 and every observed m_ij
  // unchanged, yet differ somewhere. Empty when connected.
  std::vector<double> witness_theta;
  std::vector<double> witness_beta;
  std::vector<std::int32_t> empty_rows;
  std::vector<std::int32_t> empty_cols;
};

ConnectivityReport check_connectivity(const ObservedBinaryMatrix& data);

// Reconstructs the unique (theta, beta) with sum(theta) = 0 from m values
// given on the observed cells (CSR order), by propagating potentials along a
// spanning tree of the bipartite graph and centering. Off-tree cells are
// checked for cycle consistency.
// Throws IdentifiabilityError on a disconnected design and NumericError when
// some cycle residual exceeds 1e-8.
ModelParams anchored_solve(const ObservedBinaryMatrix& data,
                           const std::vector<double>& m_values);

}  // namespace bitmat
