#include "wshift/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "wshift/numeric.hpp"

namespace wshift {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void require_unit(double t, const char* what) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
}

// F(x) = sup{u : q(u) <= x} for a nondecreasing quantile q.
double cdf_from_quantile(const AnalyticDistribution& d, double x) {
  if (x < d.support_lo()) return 0.0;
  if (x >= d.support_hi()) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (d.quantile(mid) <= x)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

QuantileShape combine(QuantileShape a, QuantileShape b) {
  using S = QuantileShape;
  if (a == S::smooth || b == S::smooth) return S::smooth;
  if (a == S::affine && b == S::affine) return S::affine;
  if (a == S::step && b == S::step) return S::step;
  return S::piecewise_affine;
}

}  // namespace

TransportMap::TransportMap(AnalyticDistribution source, Law target)
    : source_(std::move(source)), target_(as_distribution(target)) {}

double TransportMap::operator()(double x) const {
  if (!(x >= source_.support_lo() && x <= source_.support_hi()))
    throw std::domain_error("transport map evaluated at " + fmt(x) + ", outside the support of " + source_.name());
  const double u = std::clamp(source_.cdf(x), 0.0, 1.0);
  return target_.quantile(u);
}

TransportMap transport_map(const AnalyticDistribution& source, const Law& target) {
  return TransportMap(source, target);
}

AnalyticDistribution InterpolationPath::at() const {
  return kind == InterpolationKind::displacement ? displacement_interpolate(source, target, parameter)
                                                 : linear_interpolate(source, target, parameter);
}

AnalyticDistribution displacement_interpolate(const Law& source, const Law& target, double eps) {
  require_unit(eps, "displacement parameter");
  const AnalyticDistribution p = as_distribution(source);
  const AnalyticDistribution q = as_distribution(target);
  if (eps == 0.0) return p;
  if (eps == 1.0) return q;

  AnalyticDistribution::Spec s;
  s.name = "displacement(" + p.name() + "->" + q.name() + "," + fmt(eps) + ")";
  s.quantile = [p, q, eps](double u) { return (1.0 - eps) * p.quantile(u) + eps * q.quantile(u); };
  s.support_lo = (1.0 - eps) * p.support_lo() + eps * q.support_lo();
  s.support_hi = (1.0 - eps) * p.support_hi() + eps * q.support_hi();
  if (std::isnan(s.support_lo)) s.support_lo = -std::numeric_limits<double>::infinity();
  if (std::isnan(s.support_hi)) s.support_hi = std::numeric_limits<double>::infinity();
  s.breaks.assign(p.breaks().begin(), p.breaks().end());
  s.breaks.insert(s.breaks.end(), q.breaks().begin(), q.breaks().end());
  s.shape = combine(p.shape(), q.shape());
  if (s.shape == QuantileShape::affine) {
    s.affine_intercept = (1.0 - eps) * p.affine_intercept() + eps * q.affine_intercept();
    s.affine_slope = (1.0 - eps) * p.affine_slope() + eps * q.affine_slope();
  }
  s.satisfies_compact_support_assumption =
      p.satisfies_compact_support_assumption() && q.satisfies_compact_support_assumption();

  // The CDF needs the finished quantile, so build in two steps.
  AnalyticDistribution partial{[&] {
    AnalyticDistribution::Spec t = s;
    t.cdf = [](double) { return 0.0; };
    return t;
  }()};
  s.cdf = [partial](double x) { return cdf_from_quantile(partial, x); };
  if (p.has_density() && q.has_density()) {
    s.density = [p, q, eps, partial](double x) {
      if (x < partial.support_lo() || x > partial.support_hi()) return 0.0;
      const double u = std::clamp(cdf_from_quantile(partial, x), 1e-300, 1.0 - 1e-16);
      const double slope = (1.0 - eps) / p.density_at_quantile(u) + eps / q.density_at_quantile(u);
      return slope > 0.0 ? 1.0 / slope : std::numeric_limits<double>::infinity();
    };
  }
  return AnalyticDistribution(std::move(s));
}

AnalyticDistribution linear_interpolate(const Law& source, const Law& target, double gamma) {
  require_unit(gamma, "mixture weight");
  const AnalyticDistribution p = as_distribution(source);
  const AnalyticDistribution q = as_distribution(target);
  if (gamma == 0.0) return p;
  if (gamma == 1.0) return q;

  AnalyticDistribution::Spec s;
  s.name = "mixture(" + p.name() + "," + q.name() + "," + fmt(gamma) + ")";
  auto cdf = [p, q, gamma](double x) { return (1.0 - gamma) * p.cdf(x) + gamma * q.cdf(x); };
  s.cdf = cdf;
  // The mixture quantile lies between the component quantiles.
  s.quantile = [p, q, cdf](double u) {
    const double a = p.quantile(u), b = q.quantile(u);
    const double lo = std::min(a, b), hi = std::max(a, b);
    if (lo == hi) return lo;
    return bisect_nondecreasing(cdf, u, lo, hi, 1e-16, 200);
  };
  s.sampler = [p, q, gamma](Rng& rng) {
    const bool from_target = uniform_open01(rng) < gamma;
    return from_target ? q.draw(rng) : p.draw(rng);
  };
  if (p.has_density() && q.has_density())
    s.density = [p, q, gamma](double x) { return (1.0 - gamma) * p.density(x) + gamma * q.density(x); };
  s.support_lo = std::min(p.support_lo(), q.support_lo());
  s.support_hi = std::max(p.support_hi(), q.support_hi());

  // Quantile jumps of the mixture sit at mixture CDF values of component atoms
  // and of the component support endpoints.
  auto add_break_at = [&](double x) {
    if (std::isfinite(x)) s.breaks.push_back(cdf(x));
  };
  for (const auto* d : {&p, &q}) {
    add_break_at(d->support_lo());
    add_break_at(d->support_hi());
    for (double u : d->breaks()) add_break_at(d->quantile(u));
  }
  s.shape = p.shape() == QuantileShape::step && q.shape() == QuantileShape::step ? QuantileShape::step
                                                                                  : QuantileShape::smooth;
  s.satisfies_compact_support_assumption = p.satisfies_compact_support_assumption() &&
                                           q.satisfies_compact_support_assumption() &&
                                           std::max(p.support_lo(), q.support_lo()) <=
                                               std::min(p.support_hi(), q.support_hi());
  return AnalyticDistribution(std::move(s));
}

std::vector<double> relative_distance_curve(std::span<const EmpiricalDistribution> series, CurveMetric metric,
                                            const std::optional<Binning>& bins) {
  if (series.size() < 2) throw std::invalid_argument("relative distance curve needs at least two distributions");
  std::optional<Binning> shared = bins;
  if (metric == CurveMetric::tv && !shared) {
    std::vector<double> pooled;
    for (const auto& d : series) pooled.insert(pooled.end(), d.values().begin(), d.values().end());
    shared = Binning::freedman_diaconis(pooled);
  }
  const auto& first = series.front();
  auto dist = [&](const EmpiricalDistribution& other) {
    switch (metric) {
      case CurveMetric::w2:
        return wp_distance(first, other, 2.0);
      case CurveMetric::w1:
        return wp_distance(first, other, 1.0);
      case CurveMetric::tv:
        return tv_distance(first, other, shared);
    }
    return 0.0;
  };
  const double denom = dist(series.back());
  if (!(denom > 0.0)) throw std::domain_error("endpoints coincide under metric");
  std::vector<double> out(series.size());
  out.front() = 0.0;
  out.back() = 1.0;
  for (std::size_t t = 1; t + 1 < series.size(); ++t) out[t] = dist(series[t]) / denom;
  return out;
}

}  // namespace wshift
