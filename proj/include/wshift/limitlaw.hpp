#pragma once

// Monte Carlo for the limit laws of n W^2_{2,omega}(P_n, P):
//
//   null      Psi       = int |B_u / f(F^-1(u))|^2 d omega(u)
//   boundary  Psi_gamma = Psi + 2 gamma int B_u / f(F^-1(u)) (G^-1(u) - F^-1(u)) d omega(u)
//
// B is a standard Brownian bridge sampled on the grid u_k = k/K by pinning a
// Gaussian random walk; both integrals use the trapezoid rule on that grid
// (the end nodes contribute nothing since B vanishes there).

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "wshift/distance.hpp"
#include "wshift/distribution.hpp"
#include "wshift/rng.hpp"
#include "wshift/weight.hpp"

namespace wshift {

class BridgeGrid {
 public:
  /// K must be a power of two, at least 64.
  explicit BridgeGrid(std::size_t k = 4096);
  std::size_t intervals() const { return k_; }
  /// Interior nodes u_1 .. u_{K-1}.
  std::size_t nodes() const { return k_ - 1; }
  double node(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(k_); }
  double step() const { return 1.0 / static_cast<double>(k_); }

 private:
  std::size_t k_;
};

/// Bridge values at u_1 .. u_{K-1}: B_k = W_k - (k/K) W_K with W a walk of
/// N(0, 1/K) increments.
std::vector<double> simulate_bridge(const BridgeGrid& grid, Seed seed);

class LimitLawSampler {
 public:
  /// null_pf(u) = f(F^-1(u)); signal_gap(u) = G^-1(u) - F^-1(u) (may be empty
  /// for null-only use). Throws when null_pf drops below 1e-8 at a grid node
  /// with positive weight.
  LimitLawSampler(std::function<double(double)> null_pf, std::function<double(double)> signal_gap,
                  WeightMeasure omega, BridgeGrid grid, Seed seed, std::vector<double> gap_breaks = {});

  /// Builds null_pf and the gap from the laws; the null must have a density.
  static LimitLawSampler for_laws(const AnalyticDistribution& null, const std::optional<Law>& signal,
                                  const WeightMeasure& omega, BridgeGrid grid, Seed seed);

  struct Draws {
    std::vector<double> quadratic;  // Psi draws
    std::vector<double> cross;      // int B/f * gap d omega, same bridge per index
  };

  /// Replica r always uses the bridge derived from (seed, r).
  Draws draw(std::size_t reps) const;
  std::vector<double> sample_psi_null(std::size_t reps) const;
  std::vector<double> sample_psi_boundary(double gamma, std::size_t reps) const;

  bool has_signal() const { return static_cast<bool>(gap_); }
  /// W^2_{2,omega}(P, Q) from the gap function.
  double signal_distance_sq() const { return signal_sq_; }
  const WeightMeasure& omega() const { return omega_; }
  const BridgeGrid& grid() const { return grid_; }
  Seed seed() const { return seed_; }

 private:
  std::function<double(double)> null_pf_;
  std::function<double(double)> gap_;
  WeightMeasure omega_;
  BridgeGrid grid_;
  Seed seed_;
  std::vector<double> u_;
  std::vector<double> quad_w_;
  std::vector<double> cross_w_;
  double signal_sq_ = 0.0;
};

struct CriticalValue {
  double alpha = 0.05;
  double value = 0.0;
  std::size_t reps = 0;
  Seed seed = 0;
  double standard_error = 0.0;
};

/// Order statistic at index ceil((1 - alpha) reps), 1-based.
double upper_quantile(std::span<const double> draws, double alpha);

/// (1 - alpha)-quantile of the simulated null law, with a 200-resample
/// bootstrap standard error.
CriticalValue critical_value(const LimitLawSampler& sampler, double alpha, std::size_t reps);
CriticalValue critical_value_from_draws(std::span<const double> draws, double alpha, Seed seed);

/// Psi_gamma(C_alpha - gamma^2 W^2): the asymptotic Type II error at the
/// detection boundary. C_alpha comes from the same draws unless given.
double theoretical_type2(const LimitLawSampler& sampler, double gamma, double alpha, std::size_t reps,
                         std::optional<double> critical = std::nullopt);
/// Same, for many gammas over one set of draws.
std::vector<double> theoretical_type2(const LimitLawSampler::Draws& draws, std::span<const double> gammas,
                                      double critical, double signal_distance_sq);

/// Variance of 2 int H (G^-1 - F^-1) d omega by deterministic double
/// quadrature of 4 (u1 ^ u2 - u1 u2) h(u1) h(u2), h = gap / f(F^-1).
double case_ii_variance(const AnalyticDistribution& null, const Law& signal, const WeightMeasure& omega,
                        const QuadratureOptions& opts = {.nodes = 16, .max_panel = 1.0 / 64.0, .graded_levels = 0});

}  // namespace wshift
