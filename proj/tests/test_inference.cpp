#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bitmat/errors.hpp"
#include "bitmat/inference.hpp"
#include "bitmat/likelihood.hpp"
#include "bitmat/philox.hpp"
#include "bitmat/stats.hpp"
#include "oracles.hpp"

using namespace bitmat;

namespace {

ObservedBinaryMatrix full_ones(std::int64_t n, std::int64_t j) {
  std::vector<Entry> entries;
  for (std::int32_t i = 0; i < n; ++i) {
    for (std::int32_t c = 0; c < j; ++c) entries.push_back(Entry{i, c, 1});
  }
  return ObservedBinaryMatrix(n, j, entries);
}

ModelParams zeros(std::int64_t n, std::int64_t j) {
  return ModelParams{std::vector<double>(n, 0.0), std::vector<double>(j, 0.0)};
}

}  // namespace

TEST_CASE("evaluate_form") {
  ModelParams p{{5.87, -1.2, 0.0}, {0.4, -0.4}};
  CHECK(evaluate_form(LinearForm::row_coefficient(0, 3, 2), p) == doctest::Approx(5.87));

  // g = m_ij with theta_i = beta_j.
  ModelParams q{{0.4, 0.0}, {0.4, -0.4}};
  CHECK(evaluate_form(LinearForm::entry(0, 0, 2, 2), q) == doctest::Approx(0.0));

  // g = theta_i - theta_k.
  ModelParams r{{2.59, 4.25}, {0.0}};
  CHECK(evaluate_form(LinearForm::row_difference(0, 1, 2, 1), r) ==
        doctest::Approx(-1.66));

  CHECK_THROWS_AS(evaluate_form(LinearForm::row_coefficient(0, 4, 2), p),
                  DimensionError);
}

TEST_CASE("variance_main trivial values on the uniform design") {
  const std::int64_t n = 6, j = 8;
  const auto data = full_ones(n, j);
  const SigmaStats sig = sigma_stats(zeros(n, j), data);

  const auto v_theta = variance_main(LinearForm::row_coefficient(0, n, j), sig,
                                     VarianceMethod::true_param);
  CHECK(v_theta.value == doctest::Approx(4.0 / j).epsilon(1e-12));
  CHECK(v_theta.row_component == doctest::Approx(v_theta.value));
  CHECK(v_theta.col_component == 0.0);
  CHECK(v_theta.extra_terms == 0.0);

  const auto v_entry =
      variance_main(LinearForm::entry(0, 0, n, j), sig, VarianceMethod::plug_in);
  CHECK(v_entry.value == doctest::Approx(4.0 / j + 4.0 / n).epsilon(1e-12));
  CHECK(v_entry.value ==
        doctest::Approx(v_entry.row_component + v_entry.col_component +
                        v_entry.extra_terms)
            .epsilon(1e-12));
  // Ordering: the combined variance dominates each component.
  CHECK(v_entry.value >= v_entry.row_component);
  CHECK(v_entry.value >= v_entry.col_component);
}

TEST_CASE("variance_main: zero-weight coordinates never touch their sigma") {
  // Row 1 has no observations; forms that ignore it must still work.
  const ObservedBinaryMatrix data(2, 2, {{0, 0, 1}, {0, 1, 0}});
  const SigmaStats sig = sigma_stats(zeros(2, 2), data);
  CHECK_NOTHROW(variance_main(LinearForm::row_coefficient(0, 2, 2), sig,
                              VarianceMethod::plug_in));
  CHECK_THROWS_AS(variance_main(LinearForm::row_coefficient(1, 2, 2), sig,
                                VarianceMethod::plug_in),
                  NumericError);
}

TEST_CASE("removing cells from a row weakly increases the theta component") {
  const auto inst = oracles::random_instance(140, 8, 6, 0.2, 1.0);
  const SigmaStats sig = sigma_stats(inst.truth, inst.data);
  const auto v_full = variance_main(LinearForm::row_coefficient(0, 8, 6), sig,
                                    VarianceMethod::true_param);
  // Drop the last observed cell of row 0.
  std::vector<Entry> reduced;
  bool dropped = false;
  const auto entries = inst.data.entries();
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    if (!dropped && it->row == 0) {
      dropped = true;
      continue;
    }
    reduced.push_back(*it);
  }
  REQUIRE(dropped);
  const ObservedBinaryMatrix less(8, 6, reduced);
  const SigmaStats sig2 = sigma_stats(inst.truth, less);
  const auto v_less = variance_main(LinearForm::row_coefficient(0, 8, 6), sig2,
                                    VarianceMethod::true_param);
  CHECK(v_less.row_component >= v_full.row_component);
}

TEST_CASE("representation invariance of variance_main") {
  const std::int64_t n = 5, j = 4;
  const auto data = full_ones(n, j);
  const auto inst = oracles::random_instance(77, n, j, 0.0, 1.0);
  const SigmaStats sig = sigma_stats(inst.truth, data);

  std::vector<std::tuple<std::int32_t, std::int32_t, double>> weights = {
      {0, 0, 0.5}, {0, 1, -0.25}, {2, 3, 1.5}, {4, 0, -2.0}};
  const LinearForm from_entries = LinearForm::from_entry_weights(n, j, weights);
  const LinearForm direct =
      LinearForm::from_coefficients(from_entries.w_theta, from_entries.w_beta);

  const auto va = variance_main(from_entries, sig, VarianceMethod::true_param);
  const auto vb = variance_main(direct, sig, VarianceMethod::true_param);
  CHECK(va.value == vb.value);
  // Exact margin identities for origin forms.
  CHECK(from_entries.w_theta[0] == 0.25);
  CHECK(from_entries.w_beta[0] == -(0.5 - 2.0));
  CHECK(from_entries.origin_total == doctest::Approx(-0.25));
}

TEST_CASE("variance_refined symbolic case: g = m_00, uniform sigma") {
  for (const auto& [n, j] : {std::pair<int, int>{8, 6}, {12, 5}}) {
    const auto data = full_ones(n, j);
    const SigmaStats sig = sigma_stats(zeros(n, j), data);
    const LinearForm g = LinearForm::entry(0, 0, n, j);
    const auto v = variance_refined(g, sig, data);
    // Symbolic evaluation at sigma^2 = 1/4: 4/J + 4/N + 8/(NJ) - 12/(NJ).
    const double expect = 4.0 / j + 4.0 / n - 4.0 / (static_cast<double>(n) * j);
    CHECK(v.value == doctest::Approx(expect).epsilon(1e-12));
    // In this symmetric case the exact solve gives the same value.
    const auto ve = exact_variance(g, sig, data);
    CHECK(ve.value == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("variance_refined: pure column contrast equals the main column part") {
  const auto inst = oracles::random_instance(99, 7, 5, 0.15, 1.2);
  const SigmaStats sig = sigma_stats(inst.truth, inst.data);
  // Entry weights +1/-1 inside row 0: every row margin is zero, w_++ = 0.
  std::vector<std::tuple<std::int32_t, std::int32_t, double>> weights = {
      {0, 0, 1.0}, {0, 1, -1.0}};
  const LinearForm g = LinearForm::from_entry_weights(7, 5, weights);
  const auto refined = variance_refined(g, sig, inst.data);
  const auto main = variance_main(g, sig, VarianceMethod::true_param);
  CHECK(refined.value == doctest::Approx(main.col_component).epsilon(1e-12));
  CHECK(refined.extra_terms == doctest::Approx(0.0));
}

TEST_CASE("variance_refined requires origin margins") {
  const auto data = full_ones(3, 3);
  const SigmaStats sig = sigma_stats(zeros(3, 3), data);
  const LinearForm bare = LinearForm::row_coefficient(0, 3, 3);
  CHECK_THROWS_AS(variance_refined(bare, sig, data), DimensionError);
  CHECK_THROWS_AS(exact_variance(bare, sig, data), DimensionError);
}

TEST_CASE("exact_variance: total-sum form solves by symmetry") {
  const std::int64_t n = 6, j = 4;
  const auto data = full_ones(n, j);
  const SigmaStats sig = sigma_stats(zeros(n, j), data);
  std::vector<std::tuple<std::int32_t, std::int32_t, double>> weights;
  for (std::int32_t i = 0; i < n; ++i) {
    for (std::int32_t c = 0; c < j; ++c) weights.emplace_back(i, c, 1.0);
  }
  const LinearForm g = LinearForm::from_entry_weights(n, j, weights);
  const auto v = exact_variance(g, sig, data);
  CHECK(v.value == doctest::Approx(4.0 * n * j).epsilon(1e-10));
  // f and m vanish by symmetry; everything sits in b^2 sigma^2_{++}.
  CHECK(v.row_component == doctest::Approx(0.0).epsilon(1e-20));
  CHECK(v.col_component == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("exact_variance equals the main formula for projected theta at zeros") {
  const std::int64_t n = 4, j = 4;
  const auto data = full_ones(n, j);
  const SigmaStats sig = sigma_stats(zeros(n, j), data);
  const LinearForm g = LinearForm::row_effect_projected(0, n, j);
  const auto exact = exact_variance(g, sig, data);
  const auto main = variance_main(g, sig, VarianceMethod::true_param);
  const DesignStats stats = data.design_stats();
  const double bound =
      1.0 / (static_cast<double>(stats.n_star_min) * static_cast<double>(stats.j_star_min));
  CHECK(std::fabs(exact.value - main.value) <= bound);
  // Closed form for this symmetric case: (4/J)(1 - 1/N).
  CHECK(exact.value == doctest::Approx((4.0 / j) * (1.0 - 1.0 / n)).epsilon(1e-10));
}

TEST_CASE("refined tracks exact within the remainder bound on random instances") {
  for (std::uint64_t seed : {11u, 12u, 13u, 14u}) {
    const auto inst = oracles::random_instance(seed, 6, 4, 0.15, 1.0);
    const SigmaStats sig = sigma_stats(inst.truth, inst.data);
    const DesignStats stats = inst.data.design_stats();
    const double bound = 5.0 / (static_cast<double>(stats.n_star_min) *
                                static_cast<double>(stats.j_star_min));
    for (const LinearForm& g :
         {LinearForm::entry(0, 0, 6, 4), LinearForm::row_effect_projected(0, 6, 4),
          LinearForm::col_effect_projected(1, 6, 4)}) {
      const auto refined = variance_refined(g, sig, inst.data);
      const auto exact = exact_variance(g, sig, inst.data);
      CHECK(std::fabs(refined.value - exact.value) <= bound);
      CHECK(exact.value > 0.0);
    }
  }
}

TEST_CASE("exact_variance rejects disconnected designs and oversized systems") {
  const ObservedBinaryMatrix disc(2, 2, {{0, 0, 1}, {1, 1, 1}});
  const SigmaStats sig = sigma_stats(zeros(2, 2), disc);
  CHECK_THROWS_AS(exact_variance(LinearForm::entry(0, 0, 2, 2), sig, disc),
                  IdentifiabilityError);
}

TEST_CASE("exact_variance tracks the parametric bootstrap up to the known inflation") {
  // The sampling variance of g(M-hat) at desk scale sits above the
  // asymptotic sigma^2(g) by a factor of roughly 1 + 2.3/N + 2.7/J (the
  // remainder the asymptotics absorb; cross-checked against an independent
  // numpy implementation). Pin that behavior: the ratio lies in a band at
  // (20,16) and shrinks when both dimensions grow.
  auto bootstrap_ratio = [](std::int64_t n, std::int64_t jn, std::uint64_t seed,
                            int reps) {
    const auto inst = oracles::random_instance(seed, n, jn, 0.02, 0.3);
    const SigmaStats sig = sigma_stats(inst.truth, inst.data);
    const auto exact = exact_variance(LinearForm::entry(0, 0, n, jn), sig, inst.data);
    std::vector<double> values;
    values.reserve(reps);
    const auto cells = inst.data.entries();
    for (int r = 0; r < reps; ++r) {
      Philox rng(seed * 97 + 1, static_cast<std::uint64_t>(r));
      std::vector<Entry> entries = cells;
      for (Entry& e : entries) {
        const double p = logistic(inst.truth.theta[e.row] - inst.truth.beta[e.col]);
        e.value = rng.bernoulli(p) ? 1 : 0;
      }
      const ObservedBinaryMatrix data(n, jn, std::move(entries));
      const auto res = oracles::newton_mle(data, 1e-9, 60, &inst.truth);
      if (!res.ok) continue;  // nonexistent MLE; rare by construction
      values.push_back(res.params.theta[0] - res.params.beta[0]);
    }
    REQUIRE(values.size() > reps * 0.99);
    return sample_variance(values) / exact.value;
  };
  const double small = bootstrap_ratio(20, 16, 2025, 20000);
  CHECK(small > 1.05);
  CHECK(small < 1.50);
  const double large = bootstrap_ratio(48, 36, 2026, 8000);
  CHECK(large < small);
  CHECK(large < 1.25);
}

TEST_CASE("wald interval arithmetic") {
  const auto r = wald_from_estimate(2.59, 0.127, 0.95);
  CHECK(r.ci_lower == doctest::Approx(2.341).epsilon(5e-4));
  CHECK(r.ci_upper == doctest::Approx(2.839).epsilon(5e-4));
  CHECK(r.ci_upper - r.ci_lower ==
        doctest::Approx(2.0 * normal_quantile(0.975) * 0.127).epsilon(1e-12));
  CHECK(r.estimate >= r.ci_lower);
  CHECK(r.estimate <= r.ci_upper);
  CHECK(r.p_value == doctest::Approx(two_sided_p(r.z_stat)).epsilon(1e-15));

  CHECK_THROWS_AS(wald_from_estimate(1.0, 0.0, 0.95), NumericError);
  CHECK_THROWS_AS(wald_from_estimate(1.0, 0.1, 1.0), NumericError);
}

TEST_CASE("reported difference reproduces the published p-value magnitude") {
  const auto r = wald_from_estimate(-1.66, 0.169, 0.95);
  CHECK(r.log10_p == doctest::Approx(-22.05).epsilon(2e-3));
  CHECK(r.p_value == doctest::Approx(9.0e-23).epsilon(0.02));
}

TEST_CASE("test_difference on identical rows gives estimate 0, p = 1") {
  // Rows 0 and 1 share the same observed pattern and values.
  std::vector<Entry> entries;
  const std::vector<std::vector<int>> y = {
      {1, 0, 1, 1}, {1, 0, 1, 1}, {0, 1, 1, 0}, {1, 1, 0, 0}, {0, 0, 1, 1}};
  for (std::int32_t i = 0; i < 5; ++i) {
    for (std::int32_t j = 0; j < 4; ++j) {
      entries.push_back(Entry{i, j, static_cast<std::uint8_t>(y[i][j])});
    }
  }
  const ObservedBinaryMatrix data(5, 4, entries);
  const auto oracle = oracles::newton_mle(data);
  REQUIRE(oracle.ok);
  const auto r = test_difference(0, 1, oracle.params, data);
  CHECK(std::fabs(r.estimate) < 1e-8);
  CHECK(r.p_value > 1.0 - 1e-6);
  CHECK_THROWS_AS(test_difference(2, 2, oracle.params, data), DimensionError);
}

TEST_CASE("p-value/CI duality for the difference test") {
  const auto inst = oracles::random_instance(321, 10, 7, 0.1, 1.0);
  const auto oracle = oracles::newton_mle(inst.data);
  REQUIRE(oracle.ok);
  for (double level : {0.9, 0.95, 0.99}) {
    for (std::int64_t k = 1; k < 5; ++k) {
      const auto r = test_difference(0, k, oracle.params, inst.data, level);
      const bool rejects = r.p_value < 1.0 - level;
      const bool excludes_zero = r.ci_lower > 0.0 || r.ci_upper < 0.0;
      CHECK(rejects == excludes_zero);
    }
  }
}

TEST_CASE("wald_interval end to end with each method") {
  const auto inst = oracles::random_instance_with_mle(606, 9, 6, 0.1, 0.8);
  const auto oracle = oracles::newton_mle(inst.data);
  REQUIRE(oracle.ok);
  const SigmaStats sig = sigma_stats(oracle.params, inst.data);
  const LinearForm g = LinearForm::entry(0, 0, 9, 6);
  const auto plug =
      wald_interval(g, oracle.params, sig, inst.data, 0.95, VarianceMethod::plug_in);
  const auto refined =
      wald_interval(g, oracle.params, sig, inst.data, 0.95, VarianceMethod::refined);
  const auto exact =
      wald_interval(g, oracle.params, sig, inst.data, 0.95, VarianceMethod::exact_oracle);
  CHECK(plug.estimate == refined.estimate);
  CHECK(plug.estimate == exact.estimate);
  CHECK(plug.se > 0.0);
  CHECK(refined.variance.method == VarianceMethod::refined);
  CHECK(exact.variance.method == VarianceMethod::exact_oracle);
  // Methods agree to leading order.
  CHECK(refined.se == doctest::Approx(exact.se).epsilon(0.2));
}

TEST_CASE("simulated null rejection rate is near the nominal size") {
  // theta*_0 = theta*_1 by construction; the z test at alpha = 0.05 should
  // reject about 5% of the time.
  const std::int64_t n = 30, jn = 24;
  ModelParams truth{std::vector<double>(n), std::vector<double>(jn)};
  Philox prng(8080, 0);
  for (double& v : truth.theta) v = prng.uniform(-0.5, 0.5);
  for (double& v : truth.beta) v = prng.uniform(-0.5, 0.5);
  truth.theta[1] = truth.theta[0];
  double mean = 0.0;
  for (double v : truth.theta) mean += v;
  truth.theta[0] -= mean / 2;  // keep the pair equal while centering
  truth.theta[1] -= mean / 2;
  for (std::size_t i = 2; i < truth.theta.size(); ++i) truth.theta[i] -= 0.0;
  truth = center(truth);
  // centering shifts both rows equally, so theta_0 == theta_1 still.
  REQUIRE(truth.theta[0] == doctest::Approx(truth.theta[1]));

  std::vector<Entry> cells;
  for (std::int32_t i = 0; i < n; ++i) {
    for (std::int32_t j = 0; j < jn; ++j) cells.push_back(Entry{i, j, 0});
  }
  int rejects = 0, used = 0;
  const int reps = 2000;
  Philox rng(7171, 1);
  for (int r = 0; r < reps; ++r) {
    std::vector<Entry> entries = cells;
    for (Entry& e : entries) {
      const double p = logistic(truth.theta[e.row] - truth.beta[e.col]);
      e.value = rng.bernoulli(p) ? 1 : 0;
    }
    const ObservedBinaryMatrix data(n, jn, std::move(entries));
    const auto res = oracles::newton_mle(data, 1e-9, 60, &truth);
    if (!res.ok) continue;
    ++used;
    const auto t = test_difference(0, 1, res.params, data);
    if (t.p_value < 0.05) ++rejects;
  }
  REQUIRE(used > reps * 0.99);
  const double rate = static_cast<double>(rejects) / used;
  CHECK(rate >= 0.03);
  CHECK(rate <= 0.07);
}
