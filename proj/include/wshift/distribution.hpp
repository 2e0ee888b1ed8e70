#pragma once

// One-dimensional laws described by their CDF / quantile pair.
//
// Quantile convention: the generalized inverse F^-1(u) = inf{x : F(x) >= u};
// for a sample this is the order statistic X_(ceil(n u)).

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wshift/rng.hpp"

namespace wshift {

/// How the quantile function behaves between its breakpoints. Integrators use
/// this to pick an exact rule where one exists.
enum class QuantileShape {
  smooth,  // generic; integrate with Gauss-Legendre panels
  affine,  // quantile(u) = intercept + slope * u on all of (0, 1)
  piecewise_affine,  // affine between consecutive `breaks`
  step,    // piecewise constant, jumps only at `breaks`
};

class AnalyticDistribution {
 public:
  struct Spec {
    std::string name;
    std::function<double(double)> cdf;
    std::function<double(double)> quantile;            // evaluated on (0, 1)
    std::function<double(double)> density;             // empty for laws without one
    std::function<double(Rng&)> sampler;               // optional; defaults to inverse transform
    double support_lo = 0.0;                           // may be -inf
    double support_hi = 1.0;                           // may be +inf
    std::vector<double> breaks;                        // u in (0, 1) where the quantile kinks or jumps
    QuantileShape shape = QuantileShape::smooth;
    double affine_intercept = 0.0;
    double affine_slope = 0.0;
    bool satisfies_compact_support_assumption = false;  // density continuous, bounded below, compact support
  };

  explicit AnalyticDistribution(Spec spec);

  const std::string& name() const { return impl_->name; }
  double cdf(double x) const { return impl_->cdf(x); }
  /// u must lie in [0, 1]; the endpoints map to the support endpoints.
  double quantile(double u) const;
  bool has_density() const { return static_cast<bool>(impl_->density); }
  /// Throws std::logic_error when the law has no density.
  double density(double x) const;
  /// f(F^-1(u)), the density evaluated at the u-quantile.
  double density_at_quantile(double u) const { return density(quantile(u)); }

  double support_lo() const { return impl_->support_lo; }
  double support_hi() const { return impl_->support_hi; }
  bool bounded_below() const;
  bool bounded_above() const;
  std::span<const double> breaks() const { return impl_->breaks; }
  QuantileShape shape() const { return impl_->shape; }
  double affine_intercept() const { return impl_->affine_intercept; }
  double affine_slope() const { return impl_->affine_slope; }
  bool satisfies_compact_support_assumption() const {
    return impl_->satisfies_compact_support_assumption;
  }
  bool has_sampler() const { return static_cast<bool>(impl_->sampler); }
  double draw(Rng& rng) const;

  const Spec& spec() const { return *impl_; }

 private:
  std::shared_ptr<const Spec> impl_;
};

class EmpiricalDistribution {
 public:
  /// Sorts the values. Throws std::invalid_argument on an empty or non-finite sample.
  explicit EmpiricalDistribution(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  /// X_(ceil(n u)), u in (0, 1].
  double quantile(double u) const;
  /// Fraction of values <= x.
  double cdf(double x) const;
  double mean() const;
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

  /// Step-quantile view usable wherever an AnalyticDistribution is expected.
  AnalyticDistribution as_distribution() const;

 private:
  std::vector<double> values_;
};

/// Either kind of law; transport and testing routines accept both.
using Law = std::variant<AnalyticDistribution, EmpiricalDistribution>;

AnalyticDistribution as_distribution(const Law& law);

// --- quantile formulas of the simulation families ---

/// u + p/(2 pi) sin(2 pi u); p in [0, 1].
double sine_quantile(double p, double u);
/// Identity in the middle, cosine bumps on [0, p] and [1 - p, 1]; p in (0, 1/2].
double tail_quantile(double p, double u);

// --- built-in families ---

AnalyticDistribution uniform(double lo, double hi);
AnalyticDistribution uniform01();
AnalyticDistribution gaussian(double mean, double sd);
AnalyticDistribution truncated_gaussian(double mean, double sd, double lo, double hi);
AnalyticDistribution sine_quantile_distribution(double p);
AnalyticDistribution tail_quantile_distribution(double p);
AnalyticDistribution two_point(double lo, double hi);
AnalyticDistribution point_mass(double x);

/// Restrict a continuous law to [lo, hi] and renormalize.
AnalyticDistribution truncate(const AnalyticDistribution& d, double lo, double hi);
/// Law of a X + b for X ~ d, a != 0.
AnalyticDistribution affine_pushforward(const AnalyticDistribution& d, double a, double b);

struct BuiltinFamily {
  enum class Tag { uniform01, gaussian, sine_quantile, tail_quantile, two_point };
  Tag tag = Tag::uniform01;
  std::vector<double> params;

  AnalyticDistribution make() const;
};

// --- sampling ---

/// n inverse-transform draws, sorted. Deterministic in (d, n, seed).
EmpiricalDistribution sample(const AnalyticDistribution& d, std::size_t n, Seed seed);
/// n draws with replacement from the sample, sorted.
EmpiricalDistribution sample(const EmpiricalDistribution& d, std::size_t n, Seed seed);
EmpiricalDistribution sample(const Law& d, std::size_t n, Seed seed);

}  // namespace wshift
