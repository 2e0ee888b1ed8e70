#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "wshift/distance.hpp"
#include "wshift/distribution.hpp"

namespace wshift {

/// The monotone map x -> G^-1(F(x)) pushing P forward to Q.
class TransportMap {
 public:
  TransportMap(AnalyticDistribution source, Law target);
  /// Throws std::domain_error for x outside the support of the source.
  double operator()(double x) const;

 private:
  AnalyticDistribution source_;
  AnalyticDistribution target_;
};

TransportMap transport_map(const AnalyticDistribution& source, const Law& target);

enum class InterpolationKind { displacement, linear };

struct InterpolationPath {
  Law source;
  Law target;
  InterpolationKind kind = InterpolationKind::displacement;
  double parameter = 0.0;  // epsilon for displacement, gamma for linear

  AnalyticDistribution at() const;
};

/// Quantile (1 - eps) F^-1 + eps G^-1.
AnalyticDistribution displacement_interpolate(const Law& source, const Law& target, double eps);
/// Mixture with CDF (1 - gamma) F + gamma G; draws come from one component.
AnalyticDistribution linear_interpolate(const Law& source, const Law& target, double gamma);

enum class CurveMetric { w2, w1, tv };

/// d(P_0, P_t) / d(P_0, P_last) along a series. TV uses a shared binning over
/// the pooled series (Freedman-Diaconis unless given).
std::vector<double> relative_distance_curve(std::span<const EmpiricalDistribution> series, CurveMetric metric,
                                            const std::optional<Binning>& bins = std::nullopt);

}  // namespace wshift
