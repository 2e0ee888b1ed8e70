#include "wshift/hypotest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "wshift/kernels.hpp"
#include "wshift/parallel.hpp"

namespace wshift {

namespace {

constexpr std::size_t kMinResamplingReps = 100;

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

void TestConfig::validate() const {
  require_alpha(alpha);
  if (const auto* t = std::get_if<TabulatedCritical>(&critical_source)) {
    if (!(t->value > 0.0)) throw std::invalid_argument("tabulated critical value must be positive");
  }
  if (const auto* r = std::get_if<ResamplingCritical>(&critical_source)) {
    if (r->reps < kMinResamplingReps) throw std::invalid_argument("insufficient reference draws");
  }
}

double wasserstein_statistic(const EmpiricalDistribution& samples, const AnalyticDistribution& null_dist,
                             const WeightMeasure& omega, const QuadratureOptions& opts) {
  return static_cast<double>(samples.size()) * w2_weighted_squared(samples, null_dist, omega, opts);
}

double ks_statistic(const EmpiricalDistribution& samples, const AnalyticDistribution& null_dist) {
  return ks_statistic(samples.values(), null_dist);
}

double ks_statistic(std::span<const double> x, const AnalyticDistribution& null_dist) {
  if (x.empty()) throw std::invalid_argument("empty empirical distribution");
  std::vector<double> c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = null_dist.cdf(x[i]);
  return std::sqrt(static_cast<double>(x.size())) * kernels::ks_sup(c);
}

double add_one_p_value(std::span<const double> sorted_draws, double statistic) {
  const auto first_ge = std::lower_bound(sorted_draws.begin(), sorted_draws.end(), statistic);
  const auto at_least = static_cast<double>(sorted_draws.end() - first_ge);
  return (1.0 + at_least) / (static_cast<double>(sorted_draws.size()) + 1.0);
}

PreparedTest::PreparedTest(TestConfig config, std::size_t n)
    : config_(std::move(config)), n_(n), plan_(config_.null_dist, n, config_.omega, config_.quadrature) {
  config_.validate();
  const auto& null_dist = config_.null_dist;
  if (!null_dist.satisfies_compact_support_assumption())
    warnings_.push_back("null law " + null_dist.name() +
                        " does not have compact support with a density bounded away from zero; the asymptotic "
                        "calibration of the critical value is not guaranteed");

  std::visit(
      [&](const auto& src) {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, TabulatedCritical>) {
          critical_ = src.value;
          provenance_ = {"tabulated", src.seed, src.pvalue_reps, src.grid_k};
          if (src.pvalue_reps > 0) {
            auto sampler =
                LimitLawSampler::for_laws(null_dist, std::nullopt, config_.omega, BridgeGrid(src.grid_k), src.seed);
            reference_ = sorted(sampler.sample_psi_null(src.pvalue_reps));
          }
        } else if constexpr (std::is_same_v<T, LimitLawCritical>) {
          auto sampler =
              LimitLawSampler::for_laws(null_dist, std::nullopt, config_.omega, BridgeGrid(src.grid_k), src.seed);
          reference_ = sorted(sampler.sample_psi_null(src.reps));
          const auto cv = critical_value_from_draws(reference_, config_.alpha, src.seed);
          critical_ = cv.value;
          critical_se_ = cv.standard_error;
          provenance_ = {"limitlaw", src.seed, src.reps, src.grid_k};
        } else {
          reference_.resize(src.reps);
          parallel_for(src.reps, [&](std::size_t r) {
            const auto s = sample(null_dist, n_, derive_seed(src.seed, "null-resample", {r}));
            reference_[r] = static_cast<double>(n_) * plan_.integrate_sq(s.values());
          });
          std::sort(reference_.begin(), reference_.end());
          critical_ = upper_quantile(reference_, config_.alpha);
          provenance_ = {"resampling", src.seed, src.reps, 0};
        }
      },
      config_.critical_source);
}

double PreparedTest::statistic(std::span<const double> sorted_sample) const {
  if (sorted_sample.size() != n_) throw std::invalid_argument("sample size does not match the prepared test");
  return static_cast<double>(n_) * plan_.integrate_sq(sorted_sample);
}

TestOutcome PreparedTest::run(const EmpiricalDistribution& samples) const {
  if (reference_.empty()) throw std::logic_error("prepared test has no reference draws for a p-value");
  TestOutcome out;
  out.n = samples.size();
  out.statistic = statistic(samples.values());
  out.critical_value = critical_;
  out.reject = out.statistic > critical_;
  out.p_value = add_one_p_value(reference_, out.statistic);
  out.provenance = provenance_;
  out.critical_standard_error = critical_se_;
  out.warnings = warnings_;
  return out;
}

TestOutcome run_test(const EmpiricalDistribution& samples, const TestConfig& config) {
  return PreparedTest(config, samples.size()).run(samples);
}

EmpiricalDistribution subsample(const EmpiricalDistribution& p0, std::size_t n, Seed seed, ResamplingOptions opts) {
  if (n == 0) throw std::invalid_argument("subsample size must be at least 1");
  if (opts.with_replacement) return sample(p0, n, seed);
  const auto vals = p0.values();
  if (n > vals.size()) throw std::invalid_argument("subsample without replacement larger than the reference sample");
  Rng rng = make_rng(seed);
  std::vector<std::size_t> idx(vals.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t remaining = idx.size() - i;
    const auto j = i + std::min(static_cast<std::size_t>(static_cast<double>(remaining) * uniform_open01(rng)),
                                remaining - 1);
    std::swap(idx[i], idx[j]);
    out[i] = vals[idx[i]];
  }
  return EmpiricalDistribution(std::move(out));
}

std::vector<double> resampling_reference(const EmpiricalDistribution& p0, std::size_t n, std::size_t reps, Seed seed,
                                         ResamplingOptions opts) {
  std::vector<double> draws(reps);
  parallel_for(reps, [&](std::size_t r) {
    const auto s = subsample(p0, n, derive_seed(seed, "subsample", {r}), opts);
    draws[r] = wp_distance(p0, s, 2.0);
  });
  return draws;
}

double resampling_critical_value(const EmpiricalDistribution& p0, std::size_t n, double alpha, std::size_t reps,
                                 Seed seed, ResamplingOptions opts) {
  require_alpha(alpha);
  if (n == 0) throw std::invalid_argument("subsample size must be at least 1");
  if ((1.0 - alpha) * static_cast<double>(reps) < 10.0)
    throw std::invalid_argument("insufficient reps for the requested quantile");
  return upper_quantile(resampling_reference(p0, n, reps, seed, opts), alpha);
}

ResamplingPowerResult resampling_power_detail(const EmpiricalDistribution& p0, const EmpiricalDistribution& pt,
                                              std::size_t n, double alpha, std::size_t trials, std::size_t reps,
                                              Seed seed, ResamplingOptions opts) {
  if (trials == 0) throw std::invalid_argument("trials must be at least 1");
  ResamplingPowerResult res;
  res.trials = trials;
  res.critical_value = resampling_critical_value(p0, n, alpha, reps, derive_seed(seed, "critical"), opts);
  std::vector<unsigned char> hit(trials);
  parallel_for(trials, [&](std::size_t t) {
    const auto s = subsample(pt, n, derive_seed(seed, "trial", {t}), opts);
    hit[t] = wp_distance(p0, s, 2.0) > res.critical_value;
  });
  const auto count = std::count(hit.begin(), hit.end(), 1);
  res.power = static_cast<double>(count) / static_cast<double>(trials);
  res.standard_error = std::sqrt(res.power * (1.0 - res.power) / static_cast<double>(trials));
  return res;
}

double resampling_power(const EmpiricalDistribution& p0, const EmpiricalDistribution& pt, std::size_t n, double alpha,
                        std::size_t trials, std::size_t reps, Seed seed, ResamplingOptions opts) {
  return resampling_power_detail(p0, pt, n, alpha, trials, reps, seed, opts).power;
}

}  // namespace wshift
