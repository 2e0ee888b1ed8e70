#include "wshift/distance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "wshift/kernels.hpp"
#include "wshift/numeric.hpp"

namespace wshift {

namespace {

bool is_smooth(const AnalyticDistribution& d) { return d.shape() == QuantileShape::smooth; }
bool is_step(const AnalyticDistribution& d) { return d.shape() == QuantileShape::step; }
bool is_piecewise_polynomial(const AnalyticDistribution& d) { return !is_smooth(d); }

void require_bounded(const AnalyticDistribution& d, const WeightMeasure& omega) {
  if (omega.window_lo() == 0.0 && !d.bounded_below())
    throw std::domain_error("quantile of " + d.name() +
                            " is unbounded near u = 0; set a trim window or truncate the distribution");
  if (omega.window_hi() == 1.0 && !d.bounded_above())
    throw std::domain_error("quantile of " + d.name() +
                            " is unbounded near u = 1; set a trim window or truncate the distribution");
}

void add_graded(std::vector<double>& pts, const QuadratureOptions& opts) {
  double h = 1.0 / 256.0;
  for (int j = 0; j < opts.graded_levels; ++j, h *= 0.5) {
    pts.push_back(h);
    pts.push_back(1.0 - h);
  }
}

// Sorted, deduplicated cell boundaries inside the weight window.
std::vector<double> finish_points(std::vector<double> pts, const WeightMeasure& omega) {
  const double lo = omega.window_lo(), hi = omega.window_hi();
  pts.push_back(lo);
  pts.push_back(hi);
  for (double b : omega.breaks()) pts.push_back(b);
  std::erase_if(pts, [lo, hi](double u) { return u < lo || u > hi; });
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

template <class Visit>
void for_each_node(double a, double b, int m, double max_panel, bool subdivide, const WeightMeasure& omega,
                   Visit&& visit) {
  const auto& rule = gauss_legendre(m);
  const int pieces = subdivide ? std::max(1, static_cast<int>(std::ceil((b - a) / max_panel))) : 1;
  const double h = (b - a) / pieces;
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + k * h;
    const double hi = k + 1 == pieces ? b : lo + h;
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (int j = 0; j < m; ++j) {
      const double u = mid + half * rule.nodes[j];
      visit(u, half * rule.weights[j] * omega.density(u));
    }
  }
}

double pow_abs(double d, double p) { return p == 2.0 ? d * d : p == 1.0 ? std::fabs(d) : std::pow(std::fabs(d), p); }

double analytic_pair_pow(const AnalyticDistribution& mu, const AnalyticDistribution& nu, double p,
                         const WeightMeasure& omega, const QuadratureOptions& opts) {
  require_bounded(mu, omega);
  require_bounded(nu, omega);
  std::vector<double> pts(mu.breaks().begin(), mu.breaks().end());
  pts.insert(pts.end(), nu.breaks().begin(), nu.breaks().end());
  const bool smooth = is_smooth(mu) || is_smooth(nu);
  if (smooth) add_graded(pts, opts);
  pts = finish_points(std::move(pts), omega);

  const bool both_step = is_step(mu) && is_step(nu);
  const bool exact3 = p == 2.0 && omega.is_polynomial() && is_piecewise_polynomial(mu) &&
                      is_piecewise_polynomial(nu);
  double acc = 0.0;
  for (std::size_t c = 0; c + 1 < pts.size(); ++c) {
    const double a = pts[c], b = pts[c + 1];
    if (!(b > a)) continue;
    if (both_step) {
      const double mid = 0.5 * (a + b);
      acc += pow_abs(mu.quantile(mid) - nu.quantile(mid), p) * omega.mass(a, b);
      continue;
    }
    const int m = exact3 ? 3 : opts.nodes;
    for_each_node(a, b, m, opts.max_panel, !exact3, omega, [&](double u, double w) {
      acc += w * pow_abs(mu.quantile(u) - nu.quantile(u), p);
    });
  }
  return acc;
}

// Both quantiles are step functions on the grids i/n and j/m: merge the grids
// exactly with integer cross-multiplication.
double empirical_pair_pow(const EmpiricalDistribution& x, const EmpiricalDistribution& y, double p,
                          const WeightMeasure& omega) {
  const auto xs = x.values(), ys = y.values();
  const std::uint64_t n = xs.size(), m = ys.size();
  std::uint64_t i = 0, j = 0;  // current cell is inside segment i of x and j of y
  double prev = 0.0, acc = 0.0;
  while (i < n && j < m) {
    const std::uint64_t next_x = (i + 1) * m, next_y = (j + 1) * n;  // both scaled by n*m
    double edge;
    std::uint64_t ni = i, nj = j;
    if (next_x < next_y) {
      edge = static_cast<double>(i + 1) / static_cast<double>(n);
      ++ni;
    } else if (next_y < next_x) {
      edge = static_cast<double>(j + 1) / static_cast<double>(m);
      ++nj;
    } else {
      edge = static_cast<double>(i + 1) / static_cast<double>(n);
      ++ni;
      ++nj;
    }
    if (ni == n || nj == m) edge = 1.0;
    const double w = omega.mass(prev, edge);
    if (w > 0.0) acc += w * pow_abs(xs[i] - ys[j], p);
    prev = edge;
    i = ni;
    j = nj;
  }
  return acc;
}

}  // namespace

double wp_weighted_pow(const Law& mu, const Law& nu, double p, const WeightMeasure& omega,
                       const QuadratureOptions& opts) {
  if (!(p >= 1.0)) throw std::invalid_argument("Wasserstein order p must be >= 1");
  const auto* emu = std::get_if<EmpiricalDistribution>(&mu);
  const auto* enu = std::get_if<EmpiricalDistribution>(&nu);
  if (emu && enu) return empirical_pair_pow(*emu, *enu, p, omega);
  if (emu || enu) {
    const EmpiricalDistribution& e = emu ? *emu : *enu;
    const Law& other = emu ? nu : mu;
    const SamplePlan plan(other, e.size(), omega, opts);
    return p == 2.0 ? plan.integrate_sq(e.values()) : plan.integrate_pow(e.values(), p);
  }
  return analytic_pair_pow(std::get<AnalyticDistribution>(mu), std::get<AnalyticDistribution>(nu), p, omega,
                           opts);
}

double w2_weighted_squared(const Law& mu, const Law& nu, const WeightMeasure& omega,
                           const QuadratureOptions& opts) {
  return wp_weighted_pow(mu, nu, 2.0, omega, opts);
}

double w2_weighted(const Law& mu, const Law& nu, const WeightMeasure& omega, const QuadratureOptions& opts) {
  return std::sqrt(std::max(0.0, w2_weighted_squared(mu, nu, omega, opts)));
}

double wp_distance(const Law& mu, const Law& nu, double p, const QuadratureOptions& opts) {
  const double v = wp_weighted_pow(mu, nu, p, WeightMeasure::lebesgue(), opts);
  return std::pow(std::max(0.0, v), 1.0 / p);
}

// ---------------------------------------------------------------------------

SamplePlan::SamplePlan(const Law& reference, std::size_t n, const WeightMeasure& omega,
                       const QuadratureOptions& opts)
    : n_(n) {
  if (n == 0) throw std::invalid_argument("empty empirical distribution");
  const AnalyticDistribution ref = as_distribution(reference);
  require_bounded(ref, omega);

  const double nd = static_cast<double>(n);
  std::vector<double> pts;
  pts.reserve(n + ref.breaks().size() + 2 * static_cast<std::size_t>(opts.graded_levels) + 4);
  for (std::size_t i = 1; i < n; ++i) pts.push_back(static_cast<double>(i) / nd);
  pts.insert(pts.end(), ref.breaks().begin(), ref.breaks().end());
  if (is_smooth(ref)) add_graded(pts, opts);
  pts = finish_points(std::move(pts), omega);

  const bool step = is_step(ref);
  const bool exact3 = omega.is_polynomial() && (ref.shape() == QuantileShape::affine ||
                                                ref.shape() == QuantileShape::piecewise_affine);
  const int m = exact3 ? 3 : opts.nodes;
  const std::size_t per_cell = step ? 1 : static_cast<std::size_t>(m);
  index_.reserve(pts.size() * per_cell);
  q_.reserve(pts.size() * per_cell);
  w_.reserve(pts.size() * per_cell);

  for (std::size_t c = 0; c + 1 < pts.size(); ++c) {
    const double a = pts[c], b = pts[c + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    const auto idx = std::min(static_cast<std::size_t>(mid * nd), n - 1);
    if (step) {
      index_.push_back(idx);
      q_.push_back(ref.quantile(mid));
      w_.push_back(omega.mass(a, b));
      continue;
    }
    for_each_node(a, b, m, opts.max_panel, !exact3, omega, [&](double u, double w) {
      index_.push_back(idx);
      q_.push_back(ref.quantile(u));
      w_.push_back(w);
    });
  }
}

double SamplePlan::integrate_sq(std::span<const double> x) const {
  if (x.size() != n_) throw std::invalid_argument("sample size does not match the plan");
  std::vector<double> gathered(index_.size());
  for (std::size_t k = 0; k < index_.size(); ++k) gathered[k] = x[index_[k]];
  return kernels::weighted_sq_dev(gathered, q_, w_);
}

double SamplePlan::integrate_pow(std::span<const double> x, double p) const {
  if (x.size() != n_) throw std::invalid_argument("sample size does not match the plan");
  if (p == 2.0) return integrate_sq(x);
  double acc = 0.0;
  for (std::size_t k = 0; k < index_.size(); ++k) acc += w_[k] * pow_abs(x[index_[k]] - q_[k], p);
  return acc;
}

// ---------------------------------------------------------------------------

Binning Binning::uniform(double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw std::invalid_argument("binning: need lo < hi and at least one bin");
  Binning b;
  b.edges.resize(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k)
    b.edges[k] = k == bins ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
  return b;
}

Binning Binning::freedman_diaconis(std::span<const double> pooled) {
  if (pooled.empty()) throw std::invalid_argument("binning: empty pooled sample");
  std::vector<double> v(pooled.begin(), pooled.end());
  std::sort(v.begin(), v.end());
  const double lo = v.front(), hi = v.back();
  if (!(hi > lo)) return uniform(lo - 0.5, lo + 0.5, 1);
  auto at = [&v](double prob) {
    const double pos = prob * static_cast<double>(v.size() - 1);
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    return k + 1 < v.size() ? v[k] + frac * (v[k + 1] - v[k]) : v[k];
  };
  const double iqr = at(0.75) - at(0.25);
  const double width = 2.0 * iqr * std::cbrt(1.0 / static_cast<double>(v.size()));
  std::size_t bins = width > 0.0 ? static_cast<std::size_t>(std::ceil((hi - lo) / width))
                                 : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(v.size()))));
  bins = std::clamp<std::size_t>(bins, 1, 100000);
  return uniform(lo, hi, bins);
}

namespace {

void check_edges(const Binning& bins) {
  if (bins.edges.size() < 2) throw std::invalid_argument("binning needs at least one bin");
  for (std::size_t k = 0; k + 1 < bins.edges.size(); ++k)
    if (!(bins.edges[k + 1] > bins.edges[k])) throw std::invalid_argument("binning has a zero-width bin");
}

}  // namespace

Histogram histogram(const EmpiricalDistribution& d, const Binning& bins) {
  check_edges(bins);
  const auto& e = bins.edges;
  Histogram h{e, std::vector<double>(bins.bins(), 0.0)};
  for (double x : d.values()) {
    if (x < e.front() || x > e.back()) {
      std::ostringstream os;
      os << "binning [" << e.front() << ", " << e.back() << "] does not cover value " << x;
      throw std::invalid_argument(os.str());
    }
    auto k = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), x) - e.begin());
    k = std::min(k, e.size() - 1) - 1;
    h.probs[k] += 1.0;
  }
  for (double& p : h.probs) p /= static_cast<double>(d.size());
  return h;
}

Histogram histogram(const AnalyticDistribution& d, const Binning& bins) {
  check_edges(bins);
  const auto& e = bins.edges;
  Histogram h{e, std::vector<double>(bins.bins(), 0.0)};
  const double below = d.cdf(std::nextafter(e.front(), -INFINITY));
  const double above = 1.0 - d.cdf(e.back());
  if (below > 1e-12 || above > 1e-12) throw std::invalid_argument("binning does not cover the support of " + d.name());
  double prev = d.cdf(std::nextafter(e.front(), -INFINITY));
  for (std::size_t k = 0; k < bins.bins(); ++k) {
    const double cur = d.cdf(e[k + 1]);
    h.probs[k] = std::max(0.0, cur - prev);
    prev = cur;
  }
  return h;
}

double tv_distance(const Histogram& a, const Histogram& b) {
  if (a.edges != b.edges) throw std::invalid_argument("tv_distance: histograms use different bins");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.probs.size(); ++k) acc += std::fabs(a.probs[k] - b.probs[k]);
  return std::min(1.0, 0.5 * acc);
}

double tv_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b,
                   const std::optional<Binning>& bins) {
  Binning use;
  if (bins) {
    use = *bins;
  } else {
    std::vector<double> pooled(a.values().begin(), a.values().end());
    pooled.insert(pooled.end(), b.values().begin(), b.values().end());
    use = Binning::freedman_diaconis(pooled);
  }
  return tv_distance(histogram(a, use), histogram(b, use));
}

}  // namespace wshift
