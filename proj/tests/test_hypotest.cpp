#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "wshift/hypotest.hpp"
#include "wshift/interpolation.hpp"
#include "wshift/rng.hpp"

using namespace wshift;

namespace {

TestConfig tabulated_config(std::size_t pvalue_reps = 0) {
  TestConfig c;
  c.critical_source = TabulatedCritical{kTabulatedCritical05, pvalue_reps, 1024, 1};
  return c;
}

}  // namespace

TEST_SUITE("statistics") {
  TEST_CASE("single point against the uniform") {
    const EmpiricalDistribution s({0.5});
    CHECK(wasserstein_statistic(s, uniform01(), WeightMeasure::lebesgue()) == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
    for (double x : {0.0, 0.2, 0.9}) {
      CHECK(wasserstein_statistic(EmpiricalDistribution({x}), uniform01(), WeightMeasure::lebesgue()) ==
            doctest::Approx(x * x - x + 1.0 / 3.0).epsilon(1e-14));
    }
  }

  TEST_CASE("perfect sample at cell midpoints") {
    for (std::size_t n : {10u, 37u}) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = (i + 0.5) / n;
      const double stat = wasserstein_statistic(EmpiricalDistribution(v), uniform01(), WeightMeasure::lebesgue());
      CHECK(stat == doctest::Approx(1.0 / (12.0 * n)).epsilon(1e-12));
    }
  }

  TEST_CASE("KS examples") {
    CHECK(ks_statistic(EmpiricalDistribution({0.5}), uniform01()) == doctest::Approx(0.5));
    std::vector<double> v;
    for (int i = 1; i <= 9; ++i) v.push_back(i / 10.0);
    double want = 0.0;
    for (int i = 1; i <= 9; ++i) want = std::max({want, i / 9.0 - i / 10.0, i / 10.0 - (i - 1) / 9.0});
    CHECK(ks_statistic(EmpiricalDistribution(v), uniform01()) == doctest::Approx(3.0 * want).epsilon(1e-14));
  }

  TEST_CASE("KS matches a brute-force supremum") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u;
    const auto null = sine_quantile_distribution(0.6);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> v(5 + rep);
      for (auto& x : v) x = u(rng);
      std::sort(v.begin(), v.end());
      double sup = 0.0;
      for (double x : v) {
        const double f = null.cdf(x);
        const double below = std::count_if(v.begin(), v.end(), [&](double y) { return y < x; }) / double(v.size());
        const double at = std::count_if(v.begin(), v.end(), [&](double y) { return y <= x; }) / double(v.size());
        sup = std::max({sup, std::fabs(at - f), std::fabs(f - below)});
      }
      CHECK(ks_statistic(v, null) == doctest::Approx(std::sqrt(double(v.size())) * sup).epsilon(1e-12));
    }
  }

  TEST_CASE("permutation and affine relabelling") {
    std::vector<double> v{0.3, 0.9, 0.1, 0.45, 0.7, 0.2};
    const double base = wasserstein_statistic(EmpiricalDistribution(v), uniform01(), WeightMeasure::lebesgue());
    std::mt19937_64 rng(1);
    for (int i = 0; i < 5; ++i) {
      std::shuffle(v.begin(), v.end(), rng);
      CHECK(wasserstein_statistic(EmpiricalDistribution(v), uniform01(), WeightMeasure::lebesgue()) == base);
    }
    for (double a : {-2.0, 0.5, 3.0}) {
      std::vector<double> w;
      for (double x : v) w.push_back(a * x - 1.0);
      const double s = wasserstein_statistic(EmpiricalDistribution(w), affine_pushforward(uniform01(), a, -1.0),
                                             WeightMeasure::lebesgue());
      CHECK(s == doctest::Approx(a * a * base).epsilon(1e-12));
    }
  }

  TEST_CASE("add-one p-value") {
    const std::vector<double> d{1.0, 2.0, 3.0, 4.0};
    CHECK(add_one_p_value(d, 4.0) == doctest::Approx(2.0 / 5.0));
    CHECK(add_one_p_value(d, 10.0) == doctest::Approx(1.0 / 5.0));
    CHECK(add_one_p_value(d, 0.0) == 1.0);
    CHECK(add_one_p_value(d, 2.5) == doctest::Approx(3.0 / 5.0));
  }
}

TEST_SUITE("decision") {
  TEST_CASE("config validation") {
    TestConfig c;
    c.alpha = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.alpha = 0.05;
    c.critical_source = TabulatedCritical{-1.0};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.critical_source = ResamplingCritical{99, 1};
    CHECK_THROWS_WITH_AS(c.validate(), "insufficient reference draws", std::invalid_argument);
    CHECK_THROWS_WITH_AS(run_test(sample(uniform01(), 10, 1), c), "insufficient reference draws",
                         std::invalid_argument);
  }

  TEST_CASE("reject flag equals statistic above critical value") {
    const PreparedTest t(tabulated_config(2000), 200);
    std::size_t rejects = 0;
    for (std::size_t k = 0; k < 200; ++k) {
      const double eps = k % 2 ? 0.0 : 0.02 * (k % 10);
      const auto x = sample(displacement_interpolate(uniform01(), sine_quantile_distribution(1.0), eps), 200, k);
      const auto out = t.run(x);
      REQUIRE(out.reject == (out.statistic > out.critical_value));
      REQUIRE(out.p_value > 0.0);
      REQUIRE(out.p_value <= 1.0);
      rejects += out.reject;
    }
    CHECK(rejects > 0);
  }

  TEST_CASE("null sample is not rejected for a seeded run") {
    const auto x = sample(uniform01(), 10000, derive_seed(0, "null-example"));
    const auto out = run_test(x, tabulated_config(1000));
    CHECK(out.statistic < out.critical_value);
    CHECK_FALSE(out.reject);
    CHECK(out.provenance.source == "tabulated");
    CHECK(out.n == 10000);
  }

  TEST_CASE("p-value floor at the largest reference draw") {
    const auto out = run_test(EmpiricalDistribution(std::vector<double>(50, 0.0)), tabulated_config(500));
    CHECK(out.p_value == doctest::Approx(1.0 / 501.0));
    CHECK(out.reject);
  }

  TEST_CASE("prepared test without reference draws refuses p-values") {
    const PreparedTest t(tabulated_config(0), 5);
    CHECK_THROWS_AS(t.run(sample(uniform01(), 5, 1)), std::logic_error);
    CHECK_THROWS_AS(t.statistic(std::vector<double>{0.1}), std::invalid_argument);
  }

  TEST_CASE("Type I calibration at n = 10^4") {
    const std::size_t n = 10000, trials = 1000;
    const PreparedTest t(tabulated_config(0), n);
    std::vector<unsigned char> hit(trials);
    for (std::size_t k = 0; k < trials; ++k) hit[k] = t.rejects(sample(uniform01(), n, derive_seed(1, "acceptance-null", {k})).values());
    const double freq = std::count(hit.begin(), hit.end(), 1) / double(trials);
    CHECK(freq >= 0.035);
    CHECK(freq <= 0.065);
  }

  TEST_CASE("p-values are uniform under the null") {
    TestConfig c;
    c.critical_source = ResamplingCritical{1000, 5};
    const std::size_t n = 100, trials = 500;
    const PreparedTest t(c, n);
    std::vector<double> p;
    for (std::size_t k = 0; k < trials; ++k) p.push_back(t.run(sample(uniform01(), n, derive_seed(6, "pv", {k}))).p_value);
    std::sort(p.begin(), p.end());
    double sup = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      sup = std::max({sup, std::fabs((i + 1.0) / trials - p[i]), std::fabs(p[i] - double(i) / trials)});
    CHECK(sup <= 0.08);
  }

  TEST_CASE("critical sources agree for the uniform null") {
    TestConfig c;
    c.critical_source = LimitLawCritical{1024, 20000, 3};
    const PreparedTest lim(c, 500);
    CHECK(lim.critical_value() == doctest::Approx(kTabulatedCritical05).epsilon(0.04));
    c.critical_source = ResamplingCritical{2000, 3};
    const PreparedTest res(c, 500);
    CHECK(res.critical_value() == doctest::Approx(kTabulatedCritical05).epsilon(0.08));
  }

  TEST_CASE("unbounded null warns") {
    TestConfig c;
    c.null_dist = gaussian(0.0, 1.0);
    c.omega = WeightMeasure::lebesgue().trimmed(0.01);
    c.critical_source = LimitLawCritical{256, 1000, 1};
    const auto out = run_test(sample(gaussian(0.0, 1.0), 200, 3), c);
    CHECK(out.warnings.size() == 1);
    CHECK(out.reject == (out.statistic > out.critical_value));
  }
}

TEST_SUITE("empirical-null resampling") {
  const EmpiricalDistribution& reference() {
    static const EmpiricalDistribution p0 = sample(uniform01(), 10000, 123);
    return p0;
  }

  TEST_CASE("degenerate no-replacement subsample is the reference itself") {
    const EmpiricalDistribution p0({0.3, 0.1, 0.8, 0.5});
    const ResamplingOptions opts{false};
    const auto s = subsample(p0, 4, 9, opts);
    CHECK(std::equal(s.values().begin(), s.values().end(), p0.values().begin()));
    CHECK(resampling_critical_value(p0, 4, 0.05, 200, 1, opts) == 0.0);
    CHECK_THROWS_AS(subsample(p0, 5, 1, opts), std::invalid_argument);
  }

  TEST_CASE("critical value shrinks with n") {
    double prev = INFINITY;
    for (std::size_t n : {10u, 100u, 1000u}) {
      const double c = resampling_critical_value(reference(), n, 0.05, 500, 4);
      CHECK(c <= prev);
      prev = c;
    }
  }

  TEST_CASE("critical value matches the limit-law route") {
    const double c = resampling_critical_value(reference(), 100, 0.05, 2000, 5);
    CHECK(c == doctest::Approx(std::sqrt(kTabulatedCritical05 / 100.0)).epsilon(0.15));
    CHECK_THROWS_WITH_AS(resampling_critical_value(reference(), 100, 0.05, 10, 5),
                         "insufficient reps for the requested quantile", std::invalid_argument);
  }

  TEST_CASE("power under the null is about alpha") {
    const auto r = resampling_power_detail(reference(), reference(), 50, 0.05, 200, 1000, 6);
    CHECK(std::fabs(r.power - 0.05) <= 3.0 * std::sqrt(0.05 * 0.95 / 200));
    CHECK(r.trials == 200);
  }

  TEST_CASE("disjoint shift is always detected") {
    const auto shifted = sample(uniform(0.5, 1.5), 10000, 8);
    CHECK(resampling_power(reference(), shifted, 10, 0.05, 200, 1000, 7) == 1.0);
  }

  TEST_CASE("power is nondecreasing in n") {
    const auto shifted = sample(uniform(0.05, 1.05), 10000, 9);
    double prev = 0.0;
    for (std::size_t n : {10u, 50u, 100u, 500u}) {
      const auto r = resampling_power_detail(reference(), shifted, n, 0.05, 200, 500, 10);
      CHECK(r.power + 2.0 * r.standard_error >= prev);
      prev = r.power;
    }
    CHECK(prev >= 0.9);
  }

  TEST_CASE("subsample determinism") {
    const auto a = subsample(reference(), 30, 3);
    const auto b = subsample(reference(), 30, 3);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    CHECK_THROWS_AS(subsample(reference(), 0, 3), std::invalid_argument);
  }
}
