#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bitmat/errors.hpp"
#include "bitmat/connectivity.hpp"
#include "bitmat/philox.hpp"
#include "bitmat/simulation.hpp"
#include "oracles.hpp"

using namespace bitmat;

namespace {

ObservedBinaryMatrix from_mask(std::int64_t n, std::int64_t j,
                               const std::vector<std::uint8_t>& mask) {
  std::vector<Entry> entries;
  for (std::int32_t i = 0; i < n; ++i) {
    for (std::int32_t c = 0; c < j; ++c) {
      if (mask[i * j + c]) entries.push_back(Entry{i, c, 1});
    }
  }
  return ObservedBinaryMatrix(n, j, entries);
}

}  // namespace

TEST_CASE("fully observed design is connected") {
  const auto m = from_mask(3, 2, std::vector<std::uint8_t>(6, 1));
  const auto rep = check_connectivity(m);
  CHECK(rep.connected);
  CHECK(rep.components.size() == 1);
  CHECK(rep.witness_theta.empty());
}

TEST_CASE("block-diagonal mask is disconnected with a valid witness") {
  // diag(1_{2x2}, 1_{2x2}) on a 4x4 matrix.
  std::vector<std::uint8_t> mask(16, 0);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      mask[i * 4 + j] = 1;
      mask[(i + 2) * 4 + (j + 2)] = 1;
    }
  }
  const auto m = from_mask(4, 4, mask);
  const auto rep = check_connectivity(m);
  CHECK_FALSE(rep.connected);
  CHECK(rep.components.size() == 2);

  // tau = 1: first component shifted +1, second -1.
  CHECK(rep.witness_theta[0] == doctest::Approx(1.0));
  CHECK(rep.witness_theta[2] == doctest::Approx(-1.0));
  double theta_sum = 0.0;
  for (double v : rep.witness_theta) theta_sum += v;
  CHECK(std::fabs(theta_sum) < 1e-12);
  // Observed m_ij unchanged under the shift.
  for (const Entry& e : m.entries()) {
    CHECK(std::fabs(rep.witness_theta[e.row] - rep.witness_beta[e.col]) < 1e-12);
  }
}

TEST_CASE("the five-by-four block design is connected") {
  const MissingDesign design = make_block_design(10, 8);
  std::vector<Entry> entries;
  for (const auto& [i, j] : design.cells()) entries.push_back(Entry{i, j, 1});
  const ObservedBinaryMatrix m(10, 8, entries);
  CHECK(oracles::bfs_component_count(m) == 1);  // exhaustive BFS confirms
  CHECK(check_connectivity(m).connected);
}

TEST_CASE("union-find agrees with BFS on random masks") {
  Philox rng(88, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::int64_t n = 2 + static_cast<std::int64_t>(rng.next_double() * 6);
    const std::int64_t j = 2 + static_cast<std::int64_t>(rng.next_double() * 5);
    const double keep = 0.1 + 0.5 * rng.next_double();
    std::vector<std::uint8_t> mask(n * j, 0);
    bool any = false;
    for (auto& v : mask) {
      v = rng.next_double() < keep;
      any |= v != 0;
    }
    if (!any) mask[0] = 1;
    const auto m = from_mask(n, j, mask);
    const auto rep_conn = check_connectivity(m);
    CHECK(rep_conn.components.size() == oracles::bfs_component_count(m));
    CHECK(rep_conn.connected == (rep_conn.components.size() == 1));
  }
}

TEST_CASE("connectivity is invariant under row/column permutation") {
  Philox rng(3, 1);
  for (int rep = 0; rep < 50; ++rep) {
    const std::int64_t n = 5, j = 4;
    std::vector<std::uint8_t> mask(n * j, 0);
    for (auto& v : mask) v = rng.next_double() < 0.35;
    mask[0] = 1;
    std::vector<std::int32_t> rperm = {0, 1, 2, 3, 4}, cperm = {0, 1, 2, 3};
    for (std::int64_t i = n - 1; i > 0; --i) {
      std::swap(rperm[i], rperm[static_cast<std::int64_t>(rng.next_double() * (i + 1))]);
    }
    for (std::int64_t c = j - 1; c > 0; --c) {
      std::swap(cperm[c], cperm[static_cast<std::int64_t>(rng.next_double() * (c + 1))]);
    }
    std::vector<std::uint8_t> permuted(n * j, 0);
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t c = 0; c < j; ++c) {
        permuted[rperm[i] * j + cperm[c]] = mask[i * j + c];
      }
    }
    const auto a = check_connectivity(from_mask(n, j, mask));
    const auto b = check_connectivity(from_mask(n, j, permuted));
    CHECK(a.components.size() == b.components.size());
  }
}

TEST_CASE("witness validity on random disconnected designs") {
  Philox rng(17, 0);
  int found = 0;
  for (int rep = 0; rep < 200 && found < 40; ++rep) {
    const std::int64_t n = 3 + static_cast<std::int64_t>(rng.next_double() * 5);
    const std::int64_t j = 2 + static_cast<std::int64_t>(rng.next_double() * 5);
    std::vector<std::uint8_t> mask(n * j, 0);
    for (auto& v : mask) v = rng.next_double() < 0.25;
    mask[0] = 1;
    const auto m = from_mask(n, j, mask);
    const auto rep_conn = check_connectivity(m);
    if (rep_conn.connected) continue;
    ++found;
    double theta_sum = 0.0;
    bool nonzero = false;
    for (double v : rep_conn.witness_theta) theta_sum += v;
    for (double v : rep_conn.witness_theta) nonzero |= v != 0.0;
    for (double v : rep_conn.witness_beta) nonzero |= v != 0.0;
    CHECK(std::fabs(theta_sum) < 1e-12);
    CHECK(nonzero);
    for (const Entry& e : m.entries()) {
      CHECK(std::fabs(rep_conn.witness_theta[e.row] - rep_conn.witness_beta[e.col]) <
            1e-12);
    }
  }
  CHECK(found >= 20);
}

TEST_CASE("joining two components with one cell reduces the count by one") {
  Philox rng(29, 0);
  for (int rep = 0; rep < 60; ++rep) {
    const std::int64_t n = 5, j = 5;
    std::vector<std::uint8_t> mask(n * j, 0);
    for (auto& v : mask) v = rng.next_double() < 0.2;
    const auto m = from_mask(n, j, mask);
    const auto base = check_connectivity(m);
    if (base.components.size() < 2) continue;
    // Pick one node from each of the first two components and join them.
    std::int32_t row_node = -1, col_node = -1;
    for (std::int32_t v : base.components[0]) {
      if (v < n && row_node < 0) row_node = v;
    }
    for (std::int32_t v : base.components[1]) {
      if (v >= n && col_node < 0) col_node = v - static_cast<std::int32_t>(n);
    }
    if (row_node < 0 || col_node < 0) continue;  // need a row on one side, column on the other
    std::vector<std::uint8_t> joined = mask;
    joined[row_node * j + col_node] = 1;
    const auto after = check_connectivity(from_mask(n, j, joined));
    CHECK(after.components.size() == base.components.size() - 1);
  }
}

TEST_CASE("anchored_solve reconstructs params from observed m") {
  // N=2, J=1, m = (1, -1): centering forces beta.
  const ObservedBinaryMatrix m(2, 1, {{0, 0, 1}, {1, 0, 0}});
  const ModelParams p = anchored_solve(m, {1.0, -1.0});
  CHECK(p.theta[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.theta[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(p.beta[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("anchored_solve round-trips random centered params on the block design") {
  const MissingDesign design = make_block_design(10, 8);
  std::vector<Entry> entries;
  for (const auto& [i, j] : design.cells()) entries.push_back(Entry{i, j, 1});
  const ObservedBinaryMatrix m(10, 8, entries);

  Philox rng(55, 2);
  ModelParams truth{std::vector<double>(10), std::vector<double>(8)};
  for (double& v : truth.theta) v = rng.uniform(-2, 2);
  for (double& v : truth.beta) v = rng.uniform(-2, 2);
  truth = center(truth);

  std::vector<double> m_values;
  for (const Entry& e : m.entries()) {
    m_values.push_back(truth.theta[e.row] - truth.beta[e.col]);
  }
  const ModelParams rec = anchored_solve(m, m_values);
  for (std::int64_t i = 0; i < 10; ++i) {
    CHECK(std::fabs(rec.theta[i] - truth.theta[i]) < 1e-10);
  }
  for (std::int64_t j = 0; j < 8; ++j) {
    CHECK(std::fabs(rec.beta[j] - truth.beta[j]) < 1e-10);
  }
}

TEST_CASE("anchored_solve rejects inconsistent cycles and disconnection") {
  const ObservedBinaryMatrix m(2, 2, {{0, 0, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
  // Cycle sum m00 - m01 - m10 + m11 = 0.5 != 0.
  CHECK_THROWS_AS(anchored_solve(m, {1.0, 0.5, 0.25, 0.25}), NumericError);

  std::vector<std::uint8_t> mask = {1, 0, 0, 1};
  const auto disc = from_mask(2, 2, mask);
  CHECK_THROWS_AS(anchored_solve(disc, {0.0, 0.0}), IdentifiabilityError);
}

TEST_CASE("empty rows and columns are reported, not dropped") {
  // Row 1 never observed.
  const ObservedBinaryMatrix m(2, 2, {{0, 0, 1}, {0, 1, 0}});
  const auto rep = check_connectivity(m);
  CHECK_FALSE(rep.connected);
  CHECK(rep.empty_rows == std::vector<std::int32_t>{1});
  CHECK(rep.empty_cols.empty());
  std::size_t covered = 0;
  for (const auto& comp : rep.components) covered += comp.size();
  CHECK(covered == 4);  // all N+J nodes appear
}
