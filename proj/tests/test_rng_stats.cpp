#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bitmat/philox.hpp"
#include "bitmat/stats.hpp"

using namespace bitmat;

TEST_CASE("philox is deterministic and stream-separated") {
  Philox a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  std::vector<std::uint32_t> va, vb, vc, vd;
  for (int i = 0; i < 64; ++i) {
    va.push_back(a.next_u32());
    vb.push_back(b.next_u32());
    vc.push_back(c.next_u32());
    vd.push_back(d.next_u32());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != vd);
  CHECK(vc != vd);
}

TEST_CASE("philox counter jump reproduces later blocks") {
  Philox a(7, 3);
  for (int i = 0; i < 40; ++i) a.next_u32();  // consume 10 blocks
  Philox b(7, 3);
  b.set_counter(10);
  for (int i = 0; i < 8; ++i) CHECK(a.next_u32() == b.next_u32());
}

TEST_CASE("philox doubles look uniform") {
  Philox rng(2024, 0);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  int bins[10] = {0};
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
    ++bins[static_cast<int>(u * 10.0)];
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
  // Chi-square over 10 bins: 99.99th percentile of chi2(9) is about 33.7.
  double chi2 = 0.0;
  for (int bin : bins) {
    const double expect = n / 10.0;
    chi2 += (bin - expect) * (bin - expect) / expect;
  }
  CHECK(chi2 < 33.7);
}

TEST_CASE("normal quantile matches known values") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
  CHECK(normal_quantile(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-12));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
  CHECK_THROWS(normal_quantile(0.0));
  CHECK_THROWS(normal_quantile(1.0));
}

TEST_CASE("quantile inverts the cdf") {
  for (double p : {1e-8, 1e-4, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("log-scale tail handles extreme z") {
  // Moderate z: agrees with direct erfc.
  for (double z : {1.0, 3.0, 8.0, 20.0}) {
    const double direct = std::log10(std::erfc(z * M_SQRT1_2));
    CHECK(two_sided_log10_p(z) == doctest::Approx(direct).epsilon(1e-10));
  }
  // Far tail: finite and monotone even where erfc underflows.
  const double a = two_sided_log10_p(40.0);
  const double b = two_sided_log10_p(60.0);
  CHECK(std::isfinite(a));
  CHECK(std::isfinite(b));
  CHECK(b < a);
  CHECK(a < -300.0);
}

TEST_CASE("pairwise sum and sample variance") {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + i);
  double ref = 0.0;
  for (std::size_t i = v.size(); i-- > 0;) ref += v[i];
  CHECK(pairwise_sum(v) == doctest::Approx(ref).epsilon(1e-13));

  std::vector<double> w = {1.0, 2.0, 3.0, 4.0};
  CHECK(sample_variance(w) == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS(sample_variance(std::vector<double>{1.0}));
}
