#include "wshift/limitlaw.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "wshift/kernels.hpp"
#include "wshift/numeric.hpp"
#include "wshift/parallel.hpp"

namespace wshift {

namespace {

constexpr double kMinNullDensity = 1e-8;

void fill_walk(std::span<double> walk, double sd, Seed seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, sd);
  double acc = 0.0;
  for (double& w : walk) {
    acc += normal(rng);
    w = acc;
  }
}

std::vector<double> window_points(const WeightMeasure& omega, std::span<const double> breaks) {
  std::vector<double> pts{omega.window_lo(), omega.window_hi()};
  for (double b : breaks)
    if (b > omega.window_lo() && b < omega.window_hi()) pts.push_back(b);
  for (double b : omega.breaks())
    if (b > omega.window_lo() && b < omega.window_hi()) pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace

BridgeGrid::BridgeGrid(std::size_t k) : k_(k) {
  if (k < 64 || !std::has_single_bit(k))
    throw std::invalid_argument("bridge grid size K must be a power of two and at least 64");
}

std::vector<double> simulate_bridge(const BridgeGrid& grid, Seed seed) {
  std::vector<double> walk(grid.intervals());
  fill_walk(walk, std::sqrt(grid.step()), seed);
  const double end = walk.back();
  std::vector<double> bridge(grid.nodes());
  for (std::size_t k = 0; k < bridge.size(); ++k) bridge[k] = walk[k] - grid.node(k + 1) * end;
  return bridge;
}

LimitLawSampler::LimitLawSampler(std::function<double(double)> null_pf, std::function<double(double)> signal_gap,
                                 WeightMeasure omega, BridgeGrid grid, Seed seed, std::vector<double> gap_breaks)
    : null_pf_(std::move(null_pf)),
      gap_(std::move(signal_gap)),
      omega_(std::move(omega)),
      grid_(grid),
      seed_(seed) {
  if (!null_pf_) throw std::invalid_argument("limit law sampler needs the null density-quantile map");
  const std::size_t m = grid_.nodes();
  u_.resize(m);
  quad_w_.resize(m);
  cross_w_.assign(m, 0.0);
  const double h = grid_.step();
  for (std::size_t k = 0; k < m; ++k) {
    const double u = grid_.node(k + 1);
    u_[k] = u;
    const double w = h * omega_.density(u);
    if (w == 0.0) {
      quad_w_[k] = 0.0;
      continue;
    }
    const double pf = null_pf_(u);
    if (!(pf >= kMinNullDensity) || !std::isfinite(pf)) {
      std::ostringstream os;
      os << "null density f(F^-1(u)) = " << pf << " at u = " << u
         << " is below 1e-8 inside the integration window; truncate the null or trim the window";
      throw std::domain_error(os.str());
    }
    quad_w_[k] = w / (pf * pf);
    if (gap_) cross_w_[k] = w * gap_(u) / pf;
  }
  if (gap_) {
    const auto pts = window_points(omega_, gap_breaks);
    signal_sq_ = integrate_composite(
        [this](double u) {
          const double g = gap_(u);
          return g * g * omega_.density(u);
        },
        pts, 1.0 / 256.0, 8);
  }
}

LimitLawSampler LimitLawSampler::for_laws(const AnalyticDistribution& null, const std::optional<Law>& signal,
                                          const WeightMeasure& omega, BridgeGrid grid, Seed seed) {
  if (!null.has_density()) throw std::invalid_argument("the null law " + null.name() + " has no density");
  auto pf = [null](double u) { return null.density_at_quantile(u); };
  std::function<double(double)> gap;
  std::vector<double> breaks(null.breaks().begin(), null.breaks().end());
  std::optional<double> exact_sq;
  if (signal) {
    const AnalyticDistribution q = as_distribution(*signal);
    gap = [null, q](double u) { return q.quantile(u) - null.quantile(u); };
    breaks.insert(breaks.end(), q.breaks().begin(), q.breaks().end());
    exact_sq = w2_weighted_squared(null, q, omega);
  }
  LimitLawSampler s(std::move(pf), std::move(gap), omega, grid, seed, std::move(breaks));
  if (exact_sq) s.signal_sq_ = *exact_sq;
  return s;
}

LimitLawSampler::Draws LimitLawSampler::draw(std::size_t reps) const {
  Draws d;
  d.quadratic.resize(reps);
  d.cross.resize(reps);
  const double sd = std::sqrt(grid_.step());
  const std::size_t m = grid_.nodes();
  parallel_for(reps, [&](std::size_t r) {
    thread_local std::vector<double> walk;
    walk.resize(grid_.intervals());
    fill_walk(walk, sd, derive_seed(seed_, "bridge", {r}));
    const auto sums = kernels::bridge_sums(std::span<const double>(walk).first(m), walk.back(), u_, quad_w_,
                                           cross_w_);
    d.quadratic[r] = sums.quadratic;
    d.cross[r] = sums.cross;
  });
  return d;
}

std::vector<double> LimitLawSampler::sample_psi_null(std::size_t reps) const {
  if (reps == 0) throw std::invalid_argument("reps must be at least 1");
  return draw(reps).quadratic;
}

std::vector<double> LimitLawSampler::sample_psi_boundary(double gamma, std::size_t reps) const {
  if (reps == 0) throw std::invalid_argument("reps must be at least 1");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
  if (gamma > 0.0 && !has_signal()) throw std::logic_error("sampler was built without a signal law");
  auto d = draw(reps);
  for (std::size_t r = 0; r < reps; ++r) d.quadratic[r] += 2.0 * gamma * d.cross[r];
  return std::move(d.quadratic);
}

double upper_quantile(std::span<const double> draws, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (draws.empty()) throw std::invalid_argument("no draws to take a quantile of");
  std::vector<double> v(draws.begin(), draws.end());
  const double reps = static_cast<double>(v.size());
  auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * reps - 1e-9));
  k = std::clamp<std::size_t>(k, 1, v.size());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
  return v[k - 1];
}

CriticalValue critical_value_from_draws(std::span<const double> draws, double alpha, Seed seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if ((1.0 - alpha) * static_cast<double>(draws.size()) < 10.0)
    throw std::invalid_argument("insufficient reps for the requested quantile");
  CriticalValue cv;
  cv.alpha = alpha;
  cv.reps = draws.size();
  cv.seed = seed;
  cv.value = upper_quantile(draws, alpha);

  constexpr int kBootstrap = 200;
  std::vector<double> boot(kBootstrap);
  parallel_for(kBootstrap, [&](std::size_t b) {
    Rng rng = make_rng(derive_seed(seed, "critval-bootstrap", {b}));
    std::vector<double> resample(draws.size());
    const double n = static_cast<double>(draws.size());
    for (double& v : resample) {
      const auto k = static_cast<std::size_t>(n * uniform_open01(rng));
      v = draws[std::min(k, draws.size() - 1)];
    }
    boot[b] = upper_quantile(resample, alpha);
  });
  double mean = 0.0;
  for (double v : boot) mean += v;
  mean /= kBootstrap;
  double ss = 0.0;
  for (double v : boot) ss += (v - mean) * (v - mean);
  cv.standard_error = std::sqrt(ss / (kBootstrap - 1));
  return cv;
}

CriticalValue critical_value(const LimitLawSampler& sampler, double alpha, std::size_t reps) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if ((1.0 - alpha) * static_cast<double>(reps) < 10.0)
    throw std::invalid_argument("insufficient reps for the requested quantile");
  const auto draws = sampler.sample_psi_null(reps);
  return critical_value_from_draws(draws, alpha, sampler.seed());
}

std::vector<double> theoretical_type2(const LimitLawSampler::Draws& draws, std::span<const double> gammas,
                                      double critical, double signal_distance_sq) {
  std::vector<double> out;
  out.reserve(gammas.size());
  const double reps = static_cast<double>(draws.quadratic.size());
  for (double gamma : gammas) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    const double threshold = critical - gamma * gamma * signal_distance_sq;
    std::size_t below = 0;
    for (std::size_t r = 0; r < draws.quadratic.size(); ++r)
      if (draws.quadratic[r] + 2.0 * gamma * draws.cross[r] <= threshold) ++below;
    out.push_back(static_cast<double>(below) / reps);
  }
  return out;
}

double theoretical_type2(const LimitLawSampler& sampler, double gamma, double alpha, std::size_t reps,
                         std::optional<double> critical) {
  if (!sampler.has_signal()) throw std::logic_error("sampler was built without a signal law");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const auto draws = sampler.draw(reps);
  const double c = critical ? *critical : upper_quantile(draws.quadratic, alpha);
  const double g[] = {gamma};
  return theoretical_type2(draws, g, c, sampler.signal_distance_sq())[0];
}

double case_ii_variance(const AnalyticDistribution& null, const Law& signal, const WeightMeasure& omega,
                        const QuadratureOptions& opts) {
  if (!null.has_density()) throw std::invalid_argument("the null law " + null.name() + " has no density");
  const AnalyticDistribution q = as_distribution(signal);
  std::vector<double> breaks(null.breaks().begin(), null.breaks().end());
  breaks.insert(breaks.end(), q.breaks().begin(), q.breaks().end());
  const auto pts = window_points(omega, breaks);

  auto h = [&](double u) {
    const double pf = null.density_at_quantile(u);
    if (!(pf >= kMinNullDensity) || !std::isfinite(pf))
      throw std::domain_error("null density vanishes inside the integration window");
    return (q.quantile(u) - null.quantile(u)) / pf * omega.density(u);
  };

  auto inner = [&](double u1) {
    std::vector<double> split(pts);
    split.push_back(u1);
    std::sort(split.begin(), split.end());
    split.erase(std::unique(split.begin(), split.end()), split.end());
    return integrate_composite([&](double u2) { return (std::min(u1, u2) - u1 * u2) * h(u2); }, split,
                               opts.max_panel, opts.nodes);
  };
  return 4.0 * integrate_composite([&](double u1) { return h(u1) * inner(u1); }, pts, opts.max_panel, opts.nodes);
}

}  // namespace wshift
