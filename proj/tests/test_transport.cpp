#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "wshift/distance.hpp"
#include "wshift/interpolation.hpp"

using namespace wshift;
using std::numbers::pi;

namespace {

AnalyticDistribution std_trunc() { return truncated_gaussian(0.0, 1.0, -8.0, 8.0); }
AnalyticDistribution wide_trunc() { return truncated_gaussian(1.0, 2.0, -15.0, 17.0); }

std::vector<AnalyticDistribution> builtins() {
  return {uniform01(),
          uniform(-1.0, 2.0),
          sine_quantile_distribution(0.6),
          sine_quantile_distribution(1.0),
          tail_quantile_distribution(0.3),
          two_point(0.0, 1.0),
          point_mass(0.4),
          std_trunc(),
          truncated_gaussian(0.5, 0.3, 0.0, 1.0)};
}

}  // namespace

TEST_SUITE("weights") {
  TEST_CASE("quadratic weight has unit mass") {
    for (double a : {0.0, 1.0, 2.0, 6.0, 11.5}) {
      const auto w = WeightMeasure::quadratic(a);
      CHECK(w.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
      const double num = oracle::simpson([&](double u) { return w.density(u); }, 0.0, 1.0, 2000);
      CHECK(std::fabs(num - 1.0) <= 1e-10);
      CHECK(w.density(0.5) == doctest::Approx(1.0 - a / 12.0));
    }
    CHECK_THROWS_AS(WeightMeasure::quadratic(12.0), std::invalid_argument);
    CHECK_THROWS_AS(WeightMeasure::quadratic(-1.0), std::invalid_argument);
  }

  TEST_CASE("mass over subintervals and trimming") {
    const auto w = WeightMeasure::quadratic(2.0);
    CHECK(w.mass(0.0, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
    const auto t = w.trimmed(0.1);
    CHECK(t.density(0.05) == 0.0);
    CHECK(t.density(0.5) == w.density(0.5));
    const double num = oracle::simpson([&](double u) { return w.density(u); }, 0.1, 0.9, 2000);
    CHECK(t.total_mass() == doctest::Approx(num).epsilon(1e-12));
    CHECK(t.mass(0.0, 0.2) == doctest::Approx(w.mass(0.1, 0.2)).epsilon(1e-13));
    CHECK_THROWS_AS(w.trimmed(0.5), std::invalid_argument);
  }

  TEST_CASE("custom weight mass matches numeric integral") {
    const auto w = WeightMeasure::custom("beta22", [](double u) { return 6.0 * u * (1.0 - u); });
    CHECK(std::fabs(w.total_mass() - 1.0) <= 1e-6);
    CHECK_FALSE(w.is_polynomial());
    CHECK_THROWS_AS(WeightMeasure::custom("zero", [](double) { return 0.0; }), std::invalid_argument);
  }
}

TEST_SUITE("distances") {
  TEST_CASE("sine family closed form") {
    for (double p : {0.25, 0.5, 1.0}) {
      const double d2 = w2_weighted_squared(uniform01(), sine_quantile_distribution(p), WeightMeasure::lebesgue());
      CHECK(d2 == doctest::Approx(p * p / (8.0 * pi * pi)).epsilon(1e-9));
    }
    CHECK(w2_weighted_squared(uniform01(), sine_quantile_distribution(1.0), WeightMeasure::lebesgue()) ==
          doctest::Approx(0.0126651).epsilon(1e-5));
  }

  TEST_CASE("weighted distance matches a Simpson oracle") {
    const auto p = uniform01();
    for (double a : {0.0, 2.0, 6.0}) {
      const auto w = WeightMeasure::quadratic(a);
      for (const auto& q : {sine_quantile_distribution(0.7), tail_quantile_distribution(0.3)}) {
        const double want = oracle::quantile_gap_sq([&](double u) { return p.quantile(u); },
                                                    [&](double u) { return q.quantile(u); },
                                                    [&](double u) { return w.density(u); }, 20000);
        CHECK(w2_weighted_squared(p, q, w) == doctest::Approx(want).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("truncated Gaussians") {
    const double d2 = w2_weighted_squared(std_trunc(), wide_trunc(), WeightMeasure::lebesgue());
    CHECK(std::fabs(d2 - 2.0) <= 1e-3);
    const auto a = std_trunc(), b = wide_trunc();
    const double want = oracle::quantile_gap_sq([&](double u) { return a.quantile(u); },
                                                [&](double u) { return b.quantile(u); }, [](double) { return 1.0; },
                                                400000, 1e-12);
    CHECK(d2 == doctest::Approx(want).epsilon(1e-4));
  }

  TEST_CASE("zero for identical laws and symmetric") {
    for (const auto& d : builtins()) {
      CHECK(w2_weighted(d, d, WeightMeasure::quadratic(2.0)) == 0.0);
    }
    const auto laws = builtins();
    for (const auto& a : laws)
      for (const auto& b : laws) {
        const auto w = WeightMeasure::quadratic(1.0);
        CHECK(w2_weighted(a, b, w) == w2_weighted(b, a, w));
      }
  }

  TEST_CASE("triangle inequality on built-in triples") {
    const auto laws = builtins();
    const auto w = WeightMeasure::quadratic(3.0);
    for (const auto& a : laws)
      for (const auto& b : laws)
        for (const auto& c : laws) CHECK(w2_weighted(a, c, w) <= w2_weighted(a, b, w) + w2_weighted(b, c, w) + 1e-9);
  }

  TEST_CASE("affine equivariance") {
    const auto w = WeightMeasure::quadratic(2.0);
    const std::vector<std::pair<AnalyticDistribution, AnalyticDistribution>> pairs{
        {uniform01(), sine_quantile_distribution(0.8)},
        {uniform01(), tail_quantile_distribution(0.25)},
        {std_trunc(), wide_trunc()}};
    for (const auto& [x, y] : pairs) {
      const double base = w2_weighted(x, y, w);
      for (double a : {-2.0, 0.5, 3.0}) {
        const double d = w2_weighted(affine_pushforward(x, a, 0.7), affine_pushforward(y, a, 0.7), w);
        CHECK(d == doctest::Approx(std::fabs(a) * base).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("Wasserstein-p examples") {
    const auto u = uniform01();
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
      CHECK(wp_distance(u, uniform(0.3, 1.3), p) == doctest::Approx(0.3).epsilon(1e-12));
    }
    CHECK(wp_distance(point_mass(0.0), point_mass(1.0), 1.0) == doctest::Approx(1.0));
    CHECK(wp_distance(two_point(0.0, 1.0), point_mass(0.0), 1.0) == doctest::Approx(0.5));
    for (const auto& q : builtins()) {
      CHECK(std::fabs(wp_distance(u, q, 2.0) - w2_weighted(u, q, WeightMeasure::lebesgue())) <= 1e-12);
    }
    CHECK_THROWS_AS(wp_distance(u, u, 0.5), std::invalid_argument);
  }

  TEST_CASE("unbounded quantiles need trimming") {
    CHECK_THROWS_AS(w2_weighted(gaussian(0.0, 1.0), uniform01(), WeightMeasure::lebesgue()), std::domain_error);
    const auto w = WeightMeasure::lebesgue().trimmed(0.01);
    const double d2 = w2_weighted_squared(gaussian(0.0, 1.0), gaussian(1.0, 2.0), w);
    const auto a = gaussian(0.0, 1.0), b = gaussian(1.0, 2.0);
    const double want = oracle::quantile_gap_sq([&](double u) { return a.quantile(u); },
                                                [&](double u) { return b.quantile(u); }, [](double) { return 1.0; },
                                                20000, 0.01);
    CHECK(d2 == doctest::Approx(want).epsilon(1e-9));
  }

  TEST_CASE("empirical distances against a merged-step oracle") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> a(3 + rep), b(7 + 2 * rep);
      for (auto& x : a) x = nd(rng);
      for (auto& x : b) x = nd(rng) + 0.5;
      const EmpiricalDistribution ea(a), eb(b);
      for (double p : {1.0, 2.0}) {
        CHECK(std::pow(wp_distance(ea, eb, p), p) == doctest::Approx(oracle::empirical_wpp(a, b, p)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("sample plan matches the exact per-cell integral") {
    for (std::size_t n : {1u, 2u, 10u, 257u}) {
      const SamplePlan plan(uniform01(), n, WeightMeasure::lebesgue());
      const auto s = sample(uniform01(), n, 100 + n);
      std::vector<double> v(s.values().begin(), s.values().end());
      CHECK(plan.integrate_sq(v) == doctest::Approx(oracle::empirical_vs_uniform_sq(v)).epsilon(1e-12));
      CHECK(plan.integrate_sq(v) ==
            doctest::Approx(w2_weighted_squared(s, uniform01(), WeightMeasure::lebesgue())).epsilon(1e-12));
      CHECK(plan.integrate_pow(v, 2.0) == doctest::Approx(plan.integrate_sq(v)).epsilon(1e-12));
    }
    const SamplePlan plan(uniform01(), 4, WeightMeasure::lebesgue());
    CHECK_THROWS_AS(plan.integrate_sq(std::vector<double>{0.1, 0.2}), std::invalid_argument);
  }
}

TEST_SUITE("total variation") {
  TEST_CASE("identical and disjoint samples") {
    const EmpiricalDistribution a({0.1, 0.2, 0.3}), b({5.0, 6.0, 7.0});
    CHECK(tv_distance(a, a) == 0.0);
    CHECK(tv_distance(a, b) == doctest::Approx(1.0));
    const auto bins = Binning::uniform(0.0, 1.0, 4);
    CHECK_THROWS_AS(tv_distance(a, b, bins), std::invalid_argument);
  }

  TEST_CASE("mixture scales TV linearly") {
    const auto p = uniform01(), q = uniform(0.5, 1.5);
    const auto bins = Binning::uniform(0.0, 1.5, 30);
    const double base = tv_distance(histogram(p, bins), histogram(q, bins));
    CHECK(base == doctest::Approx(0.5).epsilon(1e-12));
    for (double g : {0.0, 0.2, 0.5, 1.0}) {
      const auto mix = linear_interpolate(p, q, g);
      CHECK(tv_distance(histogram(p, bins), histogram(mix, bins)) == doctest::Approx(g * base).epsilon(1e-12));
    }
  }

  TEST_CASE("bin errors") {
    CHECK_THROWS_AS(Binning::uniform(1.0, 1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(histogram(uniform01(), Binning{{0.0, 0.5, 0.5, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(histogram(uniform01(), Binning::uniform(0.0, 0.5, 5)), std::invalid_argument);
    const auto fd = Binning::freedman_diaconis(std::vector<double>{0.0, 0.1, 0.2, 0.5, 0.9, 1.0});
    CHECK(fd.edges.front() <= 0.0);
    CHECK(fd.edges.back() >= 1.0);
  }
}

TEST_SUITE("transport maps") {
  TEST_CASE("Gaussian transport is affine") {
    const auto t = transport_map(gaussian(0.0, 1.0), gaussian(1.0, 2.0));
    for (double x : {-3.0, -0.5, 0.0, 0.7, 2.5}) CHECK(t(x) == doctest::Approx(2.0 * x + 1.0).epsilon(1e-8));
  }

  TEST_CASE("identity and sine examples") {
    const auto id = transport_map(tail_quantile_distribution(0.2), tail_quantile_distribution(0.2));
    for (double x : {0.1, 0.3, 0.5, 0.85}) CHECK(id(x) == doctest::Approx(x).epsilon(1e-9));
    const auto t = transport_map(uniform01(), sine_quantile_distribution(0.5));
    CHECK(t(0.25) == doctest::Approx(0.25 + 0.5 / (2.0 * pi)).epsilon(1e-14));
    CHECK(t(0.25) == doctest::Approx(0.329577).epsilon(1e-6));
    CHECK_THROWS_AS(t(1.5), std::domain_error);
    CHECK_THROWS_AS(t(-0.1), std::domain_error);
  }

  TEST_CASE("map is nondecreasing and pushes P forward to Q") {
    const auto q = sine_quantile_distribution(0.9);
    const auto t = transport_map(uniform01(), q);
    double prev = -INFINITY;
    for (int k = 0; k <= 1000; ++k) {
      const double y = t(k / 1000.0);
      CHECK(y >= prev);
      prev = y;
    }
    const auto x = sample(uniform01(), 20000, 99);
    std::vector<double> y;
    for (double v : x.values()) y.push_back(t(v));
    std::sort(y.begin(), y.end());
    double sup = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double f = q.cdf(y[i]);
      sup = std::max({sup, (i + 1.0) / y.size() - f, f - double(i) / y.size()});
    }
    CHECK(std::sqrt(double(y.size())) * sup < 1.36);
  }
}

TEST_SUITE("interpolation") {
  TEST_CASE("Gaussian displacement stays Gaussian") {
    const auto d = displacement_interpolate(gaussian(0.0, 1.0), gaussian(1.0, 2.0), 0.5);
    const auto want = gaussian(0.5, 1.5);
    for (int k = 1; k < 1000; ++k) {
      const double u = k / 1000.0;
      REQUIRE(std::fabs(d.quantile(u) - want.quantile(u)) <= 1e-6);
    }
    CHECK(d.cdf(0.5) == doctest::Approx(0.5).epsilon(1e-9));
  }

  TEST_CASE("displacement quantile identity and endpoints") {
    const auto p = tail_quantile_distribution(0.3), q = sine_quantile_distribution(0.8);
    for (double e : {0.0, 0.25, 0.6, 1.0}) {
      const auto d = displacement_interpolate(p, q, e);
      for (int k = 1; k < 1000; ++k) {
        const double u = k / 1000.0;
        REQUIRE(d.quantile(u) == doctest::Approx((1.0 - e) * p.quantile(u) + e * q.quantile(u)).epsilon(1e-15));
      }
    }
    CHECK(displacement_interpolate(p, q, 0.0).name() == p.name());
    CHECK_THROWS_AS(displacement_interpolate(p, q, 1.2), std::invalid_argument);
  }

  TEST_CASE("geodesic identity") {
    const std::vector<std::pair<AnalyticDistribution, AnalyticDistribution>> pairs{
        {uniform01(), sine_quantile_distribution(0.8)}, {std_trunc(), wide_trunc()}};
    for (const auto& [p, q] : pairs) {
      for (double order : {1.0, 2.0}) {
        const double full = wp_distance(p, q, order);
        for (int k = 0; k <= 10; ++k) {
          const double e = k / 10.0;
          CHECK(std::fabs(wp_distance(p, displacement_interpolate(p, q, e), order) - e * full) <= 1e-6);
        }
      }
    }
    const auto p = uniform01(), q = sine_quantile_distribution(0.8);
    CHECK(w2_weighted(p, displacement_interpolate(p, q, 0.3), WeightMeasure::lebesgue()) /
              w2_weighted(p, q, WeightMeasure::lebesgue()) ==
          doctest::Approx(0.3).epsilon(1e-6));
  }

  TEST_CASE("linear interpolation is a mixture") {
    const auto p = uniform01(), q = uniform(2.0, 3.0);
    const auto m = linear_interpolate(p, q, 0.5);
    CHECK(m.cdf(0.5) == doctest::Approx(0.25));
    CHECK(m.cdf(2.5) == doctest::Approx(0.75));
    for (double x : {-1.0, 0.3, 1.5, 2.2, 4.0}) {
      CHECK(linear_interpolate(p, q, 0.0).cdf(x) == doctest::Approx(p.cdf(x)));
      CHECK(linear_interpolate(p, q, 1.0).cdf(x) == doctest::Approx(q.cdf(x)));
    }
    const auto s = sample(m, 10000, 4);
    const double low = std::count_if(s.values().begin(), s.values().end(), [](double v) { return v < 1.5; }) / 1e4;
    CHECK(low == doctest::Approx(0.5).epsilon(0.06));
    CHECK_THROWS_AS(linear_interpolate(p, q, -0.1), std::invalid_argument);
  }

  TEST_CASE("path object dispatches by kind") {
    InterpolationPath path{uniform01(), uniform(2.0, 3.0), InterpolationKind::linear, 0.5};
    CHECK(path.at().cdf(0.5) == doctest::Approx(0.25));
    path.kind = InterpolationKind::displacement;
    CHECK(path.at().quantile(0.5) == doctest::Approx(1.5));
  }

  TEST_CASE("relative distance curves") {
    const auto p = uniform01(), q = uniform(1.0, 3.0);
    std::vector<EmpiricalDistribution> series;
    for (double t : {0.0, 0.5, 1.0}) series.push_back(sample(displacement_interpolate(p, q, t), 20000, 8));
    const auto w2 = relative_distance_curve(series, CurveMetric::w2);
    CHECK(w2[0] == 0.0);
    CHECK(w2[2] == 1.0);
    CHECK(w2[1] == doctest::Approx(0.5).epsilon(0.02));
    const auto w1 = relative_distance_curve(series, CurveMetric::w1);
    CHECK(w1[1] == doctest::Approx(0.5).epsilon(0.02));
    const auto tv = relative_distance_curve(series, CurveMetric::tv);
    CHECK(tv.front() == 0.0);
    CHECK(tv.back() == 1.0);
    for (double v : tv) CHECK((v >= 0.0 && v <= 1.0 + 1e-12));

    std::vector<EmpiricalDistribution> flat{series[0], series[1], series[0]};
    CHECK_THROWS_WITH_AS(relative_distance_curve(flat, CurveMetric::w2), "endpoints coincide under metric",
                         std::domain_error);
    CHECK_THROWS_AS(relative_distance_curve(std::span(series).first(1), CurveMetric::w2), std::invalid_argument);
  }
}
