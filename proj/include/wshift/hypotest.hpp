#pragma once

// Goodness-of-fit testing against a fully specified null P:
//
//   reject  iff  n W^2_{2,omega}(P_n, P) > C_alpha
//
// with C_alpha tabulated, simulated from the limit law, or obtained by
// parametric resampling from P. Also the Kolmogorov-Smirnov comparator and
// the empirical-null resampling route, where the null is itself a sample P0
// and the statistic is the unscaled, unweighted W_2(P0, subsample).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wshift/distance.hpp"
#include "wshift/distribution.hpp"
#include "wshift/limitlaw.hpp"
#include "wshift/rng.hpp"
#include "wshift/weight.hpp"

namespace wshift {

/// The 0.95 quantile of int_0^1 B_u^2 du.
inline constexpr double kTabulatedCritical05 = 0.46136;
/// Asymptotic 0.95 quantile of sqrt(n) KS(P_n, P).
inline constexpr double kKsCritical05 = 1.36;

struct TabulatedCritical {
  double value = kTabulatedCritical05;
  // Reference draws for the p-value only.
  std::size_t pvalue_reps = 10000;
  std::size_t grid_k = 4096;
  Seed seed = 0;
};

struct LimitLawCritical {
  std::size_t grid_k = 4096;
  std::size_t reps = 100000;
  Seed seed = 0;
};

/// Parametric resampling: reference statistics from fresh size-n samples of P.
struct ResamplingCritical {
  std::size_t reps = 1000;
  Seed seed = 0;
};

using CriticalSource = std::variant<TabulatedCritical, LimitLawCritical, ResamplingCritical>;

struct TestConfig {
  AnalyticDistribution null_dist = uniform01();
  WeightMeasure omega = WeightMeasure::lebesgue();
  double alpha = 0.05;
  CriticalSource critical_source = TabulatedCritical{};
  QuadratureOptions quadrature = {};

  /// Throws std::invalid_argument on alpha outside (0, 1) or a nonpositive
  /// tabulated value.
  void validate() const;
};

struct Provenance {
  std::string source;  // "tabulated", "limitlaw" or "resampling"
  Seed seed = 0;
  std::size_t reps = 0;
  std::size_t grid_k = 0;
};

struct TestOutcome {
  double statistic = 0.0;
  double critical_value = 0.0;
  bool reject = false;
  double p_value = 1.0;
  std::size_t n = 0;
  Provenance provenance;
  std::optional<double> critical_standard_error;
  std::vector<std::string> warnings;
};

/// n W^2_{2,omega}(P_n, P).
double wasserstein_statistic(const EmpiricalDistribution& samples, const AnalyticDistribution& null_dist,
                             const WeightMeasure& omega, const QuadratureOptions& opts = {});

/// sqrt(n) sup_x |F_n(x) - F(x)|, exact at the order statistics.
double ks_statistic(const EmpiricalDistribution& samples, const AnalyticDistribution& null_dist);
double ks_statistic(std::span<const double> sorted_sample, const AnalyticDistribution& null_dist);

/// (1 + #{draws >= statistic}) / (reps + 1); `sorted_draws` ascending.
double add_one_p_value(std::span<const double> sorted_draws, double statistic);

/// A test with its quadrature plan and reference draws fixed for one sample
/// size, for repeated evaluation across trials.
class PreparedTest {
 public:
  PreparedTest(TestConfig config, std::size_t n);

  std::size_t sample_size() const { return n_; }
  double critical_value() const { return critical_; }
  const TestConfig& config() const { return config_; }

  /// n W^2 for a sorted sample of size n.
  double statistic(std::span<const double> sorted_sample) const;
  bool rejects(std::span<const double> sorted_sample) const { return statistic(sorted_sample) > critical_; }
  TestOutcome run(const EmpiricalDistribution& samples) const;

 private:
  TestConfig config_;
  std::size_t n_;
  SamplePlan plan_;
  double critical_ = 0.0;
  std::optional<double> critical_se_;
  std::vector<double> reference_;  // sorted reference draws for p-values
  Provenance provenance_;
  std::vector<std::string> warnings_;
};

TestOutcome run_test(const EmpiricalDistribution& samples, const TestConfig& config);

// --- empirical-null resampling ---

struct ResamplingOptions {
  bool with_replacement = true;
};

/// reps draws of W_2(P0, S) for subsamples S of size n from P0.
std::vector<double> resampling_reference(const EmpiricalDistribution& p0, std::size_t n, std::size_t reps, Seed seed,
                                         ResamplingOptions opts = {});

/// (1 - alpha) quantile of W_2(P0, subsample of size n) over reps subsamples.
double resampling_critical_value(const EmpiricalDistribution& p0, std::size_t n, double alpha, std::size_t reps,
                                 Seed seed, ResamplingOptions opts = {});

struct ResamplingPowerResult {
  double power = 0.0;
  double standard_error = 0.0;
  double critical_value = 0.0;
  std::size_t trials = 0;
};

ResamplingPowerResult resampling_power_detail(const EmpiricalDistribution& p0, const EmpiricalDistribution& pt,
                                              std::size_t n, double alpha, std::size_t trials, std::size_t reps,
                                              Seed seed, ResamplingOptions opts = {});

/// Fraction of size-n subsamples of Pt whose W_2 distance to P0 exceeds the
/// resampling critical value.
double resampling_power(const EmpiricalDistribution& p0, const EmpiricalDistribution& pt, std::size_t n, double alpha,
                        std::size_t trials, std::size_t reps, Seed seed, ResamplingOptions opts = {});

/// Size-n subsample of P0, sorted; without replacement requires n <= |P0|.
EmpiricalDistribution subsample(const EmpiricalDistribution& p0, std::size_t n, Seed seed, ResamplingOptions opts = {});

}  // namespace wshift
