#pragma once

// Distances between one-dimensional laws computed through their quantile
// functions, and binned total variation.
//
// Integrals over (0, 1) are split at every breakpoint of either quantile
// (sample steps i/n, kinks of piecewise families), of the weight density and
// at the trim window. Cells where the integrand is a polynomial of degree <= 4
// (affine or constant quantiles against a polynomial weight) use an exact
// 3-point Gauss-Legendre rule; constant-vs-constant cells use the exact weight
// mass; all other cells use an m-point rule on panels of bounded width with
// geometric refinement toward u = 0 and u = 1.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wshift/distribution.hpp"
#include "wshift/weight.hpp"

namespace wshift {

struct QuadratureOptions {
  int nodes = 8;
  double max_panel = 1.0 / 128.0;
  int graded_levels = 40;  // extra cell boundaries at 2^-8 ... 2^-(7+levels) from each end
};

/// Integral of |F_mu^-1 - F_nu^-1|^2 d omega.
double w2_weighted_squared(const Law& mu, const Law& nu, const WeightMeasure& omega,
                           const QuadratureOptions& opts = {});
/// The omega-weighted Wasserstein-2 distance.
double w2_weighted(const Law& mu, const Law& nu, const WeightMeasure& omega,
                   const QuadratureOptions& opts = {});
/// Plain Wasserstein-p, p >= 1, over the Lebesgue measure.
double wp_distance(const Law& mu, const Law& nu, double p, const QuadratureOptions& opts = {});
/// p-th power of the weighted quantile distance, before the 1/p root.
double wp_weighted_pow(const Law& mu, const Law& nu, double p, const WeightMeasure& omega,
                       const QuadratureOptions& opts = {});

/// Precomputed quadrature of  u -> (x_(ceil(n u)) - F_ref^-1(u))  for a fixed
/// reference law, sample size and weight. Evaluating a new sorted sample of
/// that size is then a gather plus one fused kernel call.
class SamplePlan {
 public:
  SamplePlan(const Law& reference, std::size_t n, const WeightMeasure& omega,
             const QuadratureOptions& opts = {});

  std::size_t sample_size() const { return n_; }
  std::size_t node_count() const { return q_.size(); }

  /// Integral of (F_n^-1 - F_ref^-1)^2 d omega for a sorted sample of size n.
  double integrate_sq(std::span<const double> sorted_sample) const;
  /// Integral of |F_n^-1 - F_ref^-1|^p d omega.
  double integrate_pow(std::span<const double> sorted_sample, double p) const;

 private:
  std::size_t n_;
  std::vector<std::size_t> index_;  // sample position feeding each node
  std::vector<double> q_;           // reference quantile at each node
  std::vector<double> w_;           // quadrature weight times omega density
};

// --- total variation on binned representations ---

struct Binning {
  std::vector<double> edges;  // strictly increasing; last bin closed on the right

  static Binning uniform(double lo, double hi, std::size_t bins);
  /// Freedman-Diaconis width 2 IQR N^(-1/3) over the pooled sample's range.
  static Binning freedman_diaconis(std::span<const double> pooled);
  std::size_t bins() const { return edges.size() - 1; }
};

struct Histogram {
  std::vector<double> edges;
  std::vector<double> probs;  // sums to 1
};

/// Throws when a value falls outside the binning or a bin has zero width.
Histogram histogram(const EmpiricalDistribution& d, const Binning& bins);
/// Bin masses of an analytic law via its CDF; throws when the bins miss mass.
Histogram histogram(const AnalyticDistribution& d, const Binning& bins);
/// Half the L1 distance between two histograms on identical edges.
double tv_distance(const Histogram& a, const Histogram& b);
/// TV between two samples binned on a shared grid (Freedman-Diaconis on the
/// pooled values unless bins are given).
double tv_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b,
                   const std::optional<Binning>& bins = std::nullopt);

}  // namespace wshift
