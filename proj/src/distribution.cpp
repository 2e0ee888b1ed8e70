#include "wshift/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "wshift/numeric.hpp"

namespace wshift {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// CDF of a law whose quantile is continuous and nondecreasing on [0, 1].
std::function<double(double)> cdf_by_inversion(std::function<double(double)> q) {
  return [q = std::move(q)](double x) {
    if (x < q(0.0)) return 0.0;
    if (x >= q(1.0)) return 1.0;
    return bisect_nondecreasing(q, x, 0.0, 1.0, 1e-17, 200);
  };
}

}  // namespace

AnalyticDistribution::AnalyticDistribution(Spec spec) {
  require(static_cast<bool>(spec.cdf) && static_cast<bool>(spec.quantile),
          "distribution needs both a cdf and a quantile");
  require(spec.support_lo <= spec.support_hi, "distribution support is empty");
  std::sort(spec.breaks.begin(), spec.breaks.end());
  spec.breaks.erase(std::unique(spec.breaks.begin(), spec.breaks.end()), spec.breaks.end());
  std::erase_if(spec.breaks, [](double u) { return !(u > 0.0 && u < 1.0); });
  impl_ = std::make_shared<const Spec>(std::move(spec));
}

double AnalyticDistribution::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0))
    throw std::domain_error("quantile level " + fmt(u) + " outside [0, 1]");
  if (u == 0.0) return impl_->support_lo;
  if (u == 1.0) return impl_->support_hi;
  return impl_->quantile(u);
}

double AnalyticDistribution::density(double x) const {
  if (!impl_->density) throw std::logic_error("distribution '" + name() + "' has no density");
  return impl_->density(x);
}

bool AnalyticDistribution::bounded_below() const { return std::isfinite(impl_->support_lo); }
bool AnalyticDistribution::bounded_above() const { return std::isfinite(impl_->support_hi); }

double AnalyticDistribution::draw(Rng& rng) const {
  if (impl_->sampler) return impl_->sampler(rng);
  return impl_->quantile(uniform_open01(rng));
}

// ---------------------------------------------------------------------------

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("empty empirical distribution");
  for (double v : values_)
    if (!std::isfinite(v)) throw std::invalid_argument("empirical distribution has a non-finite value");
  if (!std::is_sorted(values_.begin(), values_.end())) std::sort(values_.begin(), values_.end());
}

double EmpiricalDistribution::quantile(double u) const {
  if (!(u > 0.0 && u <= 1.0))
    throw std::domain_error("empirical quantile level " + fmt(u) + " outside (0, 1]");
  const double n = static_cast<double>(values_.size());
  auto k = static_cast<std::size_t>(std::ceil(n * u));
  k = std::clamp<std::size_t>(k, 1, values_.size());
  return values_[k - 1];
}

double EmpiricalDistribution::cdf(double x) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), x);
  return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
}

double EmpiricalDistribution::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

AnalyticDistribution EmpiricalDistribution::as_distribution() const {
  auto vals = std::make_shared<const std::vector<double>>(values_);
  const std::size_t n = vals->size();
  AnalyticDistribution::Spec s;
  s.name = "empirical(n=" + std::to_string(n) + ")";
  s.cdf = [vals](double x) {
    const auto it = std::upper_bound(vals->begin(), vals->end(), x);
    return static_cast<double>(it - vals->begin()) / static_cast<double>(vals->size());
  };
  s.quantile = [vals](double u) {
    const double nn = static_cast<double>(vals->size());
    auto k = static_cast<std::size_t>(std::ceil(nn * u));
    k = std::clamp<std::size_t>(k, 1, vals->size());
    return (*vals)[k - 1];
  };
  s.support_lo = vals->front();
  s.support_hi = vals->back();
  s.breaks.reserve(n > 0 ? n - 1 : 0);
  for (std::size_t i = 1; i < n; ++i)
    if ((*vals)[i] != (*vals)[i - 1]) s.breaks.push_back(static_cast<double>(i) / static_cast<double>(n));
  s.shape = n == 1 ? QuantileShape::affine : QuantileShape::step;
  s.affine_intercept = vals->front();
  s.affine_slope = 0.0;
  return AnalyticDistribution(std::move(s));
}

AnalyticDistribution as_distribution(const Law& law) {
  return std::visit(
      [](const auto& d) -> AnalyticDistribution {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, EmpiricalDistribution>)
          return d.as_distribution();
        else
          return d;
      },
      law);
}

// ---------------------------------------------------------------------------

double sine_quantile(double p, double u) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sine_quantile: p must lie in [0, 1]");
  return u + p / kTwoPi * std::sin(kTwoPi * u);
}

double tail_quantile(double p, double u) {
  if (!(p > 0.0 && p <= 0.5)) throw std::invalid_argument("tail_quantile: p must lie in (0, 1/2]");
  constexpr double amp = 0.45;
  if (u <= p) return u + amp * (2.0 * p / std::numbers::pi) * std::cos(std::numbers::pi * u / (2.0 * p));
  if (u >= 1.0 - p)
    return u - amp * (2.0 * p / std::numbers::pi) * std::cos(std::numbers::pi * (1.0 - u) / (2.0 * p));
  return u;
}

AnalyticDistribution uniform(double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "uniform: need finite lo < hi");
  AnalyticDistribution::Spec s;
  s.name = lo == 0.0 && hi == 1.0 ? "uniform01" : "uniform(" + fmt(lo) + "," + fmt(hi) + ")";
  const double w = hi - lo;
  s.cdf = [lo, hi, w](double x) { return x <= lo ? 0.0 : x >= hi ? 1.0 : (x - lo) / w; };
  s.quantile = [lo, w](double u) { return lo + w * u; };
  s.density = [lo, hi, w](double x) { return x >= lo && x <= hi ? 1.0 / w : 0.0; };
  s.support_lo = lo;
  s.support_hi = hi;
  s.shape = QuantileShape::affine;
  s.affine_intercept = lo;
  s.affine_slope = w;
  s.satisfies_compact_support_assumption = true;
  return AnalyticDistribution(std::move(s));
}

AnalyticDistribution uniform01() { return uniform(0.0, 1.0); }

AnalyticDistribution gaussian(double mean, double sd) {
  require(std::isfinite(mean) && sd > 0.0 && std::isfinite(sd), "gaussian: need finite mean and sd > 0");
  AnalyticDistribution::Spec s;
  s.name = "gaussian(" + fmt(mean) + "," + fmt(sd) + ")";
  s.cdf = [mean, sd](double x) { return normal_cdf((x - mean) / sd); };
  s.quantile = [mean, sd](double u) { return mean + sd * normal_quantile(u); };
  s.density = [mean, sd](double x) { return normal_pdf((x - mean) / sd) / sd; };
  s.support_lo = -kInf;
  s.support_hi = kInf;
  s.satisfies_compact_support_assumption = false;
  return AnalyticDistribution(std::move(s));
}

AnalyticDistribution truncate(const AnalyticDistribution& d, double lo, double hi) {
  require(lo < hi, "truncate: need lo < hi");
  require(d.shape() != QuantileShape::step, "truncate: only continuous laws can be truncated");
  const double a = std::max(lo, d.support_lo());
  const double b = std::min(hi, d.support_hi());
  const double fa = d.cdf(a);
  const double mass = d.cdf(b) - fa;
  require(mass > 0.0, "truncate: interval carries no probability mass");
  AnalyticDistribution::Spec s;
  s.name = "truncate(" + d.name() + ",[" + fmt(a) + "," + fmt(b) + "])";
  s.cdf = [d, a, b, fa, mass](double x) {
    if (x <= a) return 0.0;
    if (x >= b) return 1.0;
    return std::clamp((d.cdf(x) - fa) / mass, 0.0, 1.0);
  };
  s.quantile = [d, a, b, fa, mass](double u) {
    return std::clamp(d.quantile(std::clamp(fa + u * mass, 0.0, 1.0)), a, b);
  };
  if (d.has_density())
    s.density = [d, a, b, mass](double x) { return x >= a && x <= b ? d.density(x) / mass : 0.0; };
  s.support_lo = a;
  s.support_hi = b;
  for (double u : d.breaks()) {
    const double v = (u - fa) / mass;
    if (v > 0.0 && v < 1.0) s.breaks.push_back(v);
  }
  s.shape = d.shape();
  if (d.shape() == QuantileShape::affine) {
    s.affine_intercept = d.affine_intercept() + d.affine_slope() * fa;
    s.affine_slope = d.affine_slope() * mass;
  }
  // Compact support with a continuous density that stays positive on it.
  s.satisfies_compact_support_assumption =
      d.has_density() && std::isfinite(a) && std::isfinite(b) &&
      (d.satisfies_compact_support_assumption() || !d.bounded_below() || !d.bounded_above());
  return AnalyticDistribution(std::move(s));
}

AnalyticDistribution truncated_gaussian(double mean, double sd, double lo, double hi) {
  return truncate(gaussian(mean, sd), lo, hi);
}

AnalyticDistribution sine_quantile_distribution(double p) {
  require(p >= 0.0 && p <= 1.0, "sine_quantile: p must lie in [0, 1]");
  AnalyticDistribution::Spec s;
  s.name = "sine(" + fmt(p) + ")";
  auto q = [p](double u) { return sine_quantile(p, u); };
  s.quantile = q;
  s.cdf = cdf_by_inversion(q);
  s.density = [p, cdf = s.cdf](double x) {
    if (x < 0.0 || x > 1.0) return 0.0;
    const double deriv = 1.0 + p * std::cos(kTwoPi * cdf(x));
    return deriv > 0.0 ? 1.0 / deriv : kInf;
  };
  s.support_lo = 0.0;
  s.support_hi = 1.0;
  s.satisfies_compact_support_assumption = p < 1.0;
  if (p == 0.0) {
    s.shape = QuantileShape::affine;
    s.affine_intercept = 0.0;
    s.affine_slope = 1.0;
  }
  return AnalyticDistribution(std::move(s));
}

AnalyticDistribution tail_quantile_distribution(double p) {
  require(p > 0.0 && p <= 0.5, "tail_quantile: p must lie in (0, 1/2]");
  AnalyticDistribution::Spec s;
  s.name = "tailq(" + fmt(p) + ")";
  auto q = [p](double u) { return tail_quantile(p, u); };
  s.quantile = q;
  s.cdf = cdf_by_inversion(q);
  s.density = [p, cdf = s.cdf, lo = q(0.0), hi = q(1.0)](double x) {
    if (x < lo || x > hi) return 0.0;
    const double u = cdf(x);
    double deriv = 1.0;
    if (u <= p)
      deriv = 1.0 - 0.45 * std::sin(std::numbers::pi * u / (2.0 * p));
    else if (u >= 1.0 - p)
      deriv = 1.0 - 0.45 * std::sin(std::numbers::pi * (1.0 - u) / (2.0 * p));
    return 1.0 / deriv;
  };
  s.support_lo = q(0.0);
  s.support_hi = q(1.0);
  s.breaks = {p, 1.0 - p};
  s.satisfies_compact_support_assumption = true;
  return AnalyticDistribution(std::move(s));
}

AnalyticDistribution two_point(double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "two_point: need finite lo < hi");
  AnalyticDistribution::Spec s;
  s.name = "twopoint(" + fmt(lo) + "," + fmt(hi) + ")";
  s.cdf = [lo, hi](double x) { return x < lo ? 0.0 : x < hi ? 0.5 : 1.0; };
  s.quantile = [lo, hi](double u) { return u <= 0.5 ? lo : hi; };
  s.support_lo = lo;
  s.support_hi = hi;
  s.breaks = {0.5};
  s.shape = QuantileShape::step;
  return AnalyticDistribution(std::move(s));
}

AnalyticDistribution point_mass(double x) {
  require(std::isfinite(x), "point_mass: location must be finite");
  AnalyticDistribution::Spec s;
  s.name = "delta(" + fmt(x) + ")";
  s.cdf = [x](double t) { return t < x ? 0.0 : 1.0; };
  s.quantile = [x](double) { return x; };
  s.support_lo = x;
  s.support_hi = x;
  s.shape = QuantileShape::affine;
  s.affine_intercept = x;
  s.affine_slope = 0.0;
  return AnalyticDistribution(std::move(s));
}

AnalyticDistribution affine_pushforward(const AnalyticDistribution& d, double a, double b) {
  require(a != 0.0 && std::isfinite(a) && std::isfinite(b), "affine_pushforward: need finite a != 0");
  AnalyticDistribution::Spec s;
  s.name = fmt(a) + "*" + d.name() + "+" + fmt(b);
  if (a > 0.0) {
    s.cdf = [d, a, b](double x) { return d.cdf((x - b) / a); };
    s.quantile = [d, a, b](double u) { return a * d.quantile(u) + b; };
    s.support_lo = a * d.support_lo() + b;
    s.support_hi = a * d.support_hi() + b;
    s.breaks.assign(d.breaks().begin(), d.breaks().end());
  } else {
    // P(aX + b <= x) = P(X >= (x - b)/a); exact for continuous laws.
    s.cdf = [d, a, b](double x) { return 1.0 - d.cdf((x - b) / a); };
    s.quantile = [d, a, b](double u) { return a * d.quantile(1.0 - u) + b; };
    s.support_lo = a * d.support_hi() + b;
    s.support_hi = a * d.support_lo() + b;
    for (double u : d.breaks()) s.breaks.push_back(1.0 - u);
  }
  if (d.has_density()) s.density = [d, a, b](double x) { return d.density((x - b) / a) / std::fabs(a); };
  s.shape = d.shape();
  if (d.shape() == QuantileShape::affine) {
    if (a > 0.0) {
      s.affine_intercept = a * d.affine_intercept() + b;
      s.affine_slope = a * d.affine_slope();
    } else {
      s.affine_intercept = a * (d.affine_intercept() + d.affine_slope()) + b;
      s.affine_slope = -a * d.affine_slope();
    }
  }
  s.satisfies_compact_support_assumption = d.satisfies_compact_support_assumption();
  return AnalyticDistribution(std::move(s));
}

AnalyticDistribution BuiltinFamily::make() const {
  auto need = [this](std::size_t k, const char* what) {
    if (params.size() != k) throw std::invalid_argument(std::string(what) + ": wrong number of parameters");
  };
  switch (tag) {
    case Tag::uniform01:
      need(0, "uniform01");
      return uniform01();
    case Tag::gaussian:
      if (params.size() == 2) return gaussian(params[0], params[1]);
      need(4, "gaussian");
      return truncated_gaussian(params[0], params[1], params[2], params[3]);
    case Tag::sine_quantile:
      need(1, "sine");
      return sine_quantile_distribution(params[0]);
    case Tag::tail_quantile:
      need(1, "tailq");
      return tail_quantile_distribution(params[0]);
    case Tag::two_point:
      need(2, "twopoint");
      return two_point(params[0], params[1]);
  }
  throw std::logic_error("unhandled family tag");
}

// ---------------------------------------------------------------------------

EmpiricalDistribution sample(const AnalyticDistribution& d, std::size_t n, Seed seed) {
  require(n >= 1, "sample: n must be at least 1");
  Rng rng = make_rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = d.draw(rng);
  return EmpiricalDistribution(std::move(out));
}

EmpiricalDistribution sample(const EmpiricalDistribution& d, std::size_t n, Seed seed) {
  require(n >= 1, "sample: n must be at least 1");
  Rng rng = make_rng(seed);
  const auto vals = d.values();
  const double m = static_cast<double>(vals.size());
  std::vector<double> out(n);
  for (auto& v : out) {
    auto k = static_cast<std::size_t>(m * uniform_open01(rng));
    v = vals[std::min(k, vals.size() - 1)];
  }
  return EmpiricalDistribution(std::move(out));
}

EmpiricalDistribution sample(const Law& d, std::size_t n, Seed seed) {
  return std::visit([&](const auto& x) { return sample(x, n, seed); }, d);
}

}  // namespace wshift
