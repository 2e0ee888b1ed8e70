#pragma once

// Seeded simulation studies of the test at and around the detection
// boundary. Every grid cell draws its samples from seeds derived from the
// run seed and the cell's parameter values, so tables are reproducible bit
// for bit and independent of grid order or thread count.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wshift/distribution.hpp"
#include "wshift/rng.hpp"
#include "wshift/weight.hpp"

namespace wshift {

struct Metric {
  std::string name;
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
};

struct ResultRow {
  std::vector<double> axis_values;
  std::vector<Metric> metrics;

  const Metric& metric(std::string_view name) const;
};

struct ResultTable {
  std::string experiment;
  std::vector<std::string> axes;
  std::vector<ResultRow> rows;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::string> warnings;

  /// Row whose axis values equal `coords` exactly; throws std::out_of_range.
  const ResultRow& row(std::span<const double> coords) const;
  const ResultRow& row(std::initializer_list<double> coords) const {
    return row(std::span<const double>(coords.begin(), coords.size()));
  }
  double value(std::initializer_list<double> coords, std::string_view metric) const {
    return row(coords).metric(metric).value;
  }
};

/// Long format: one line per (cell, metric) with columns
/// <axes...>,metric,estimate,se,trials; numbers with 10 significant digits.
std::string to_csv(const ResultTable& table);
/// {experiment, axes, columns, rows, metadata, warnings}; doubles round-trip exactly.
nlohmann::json to_json(const ResultTable& table);

/// Binomial standard error sqrt(v (1 - v) / trials).
double binomial_se(double v, std::size_t trials);

/// epsilon_n = min(gamma / sqrt(n), 1); appends a warning when it clips.
double boundary_epsilon(double gamma, std::size_t n, std::vector<std::string>* warnings = nullptr);

/// n draws of (1 - eps) X + eps T(X), X ~ P, T the monotone map P -> Q; sorted.
std::vector<double> alternative_sample(const AnalyticDistribution& p, const AnalyticDistribution& q, double eps,
                                       std::size_t n, Seed seed);

struct PhaseConfig {
  AnalyticDistribution p = uniform01();
  AnalyticDistribution q = truncated_gaussian(0.0, 1.0, -8.0, 8.0);
  WeightMeasure omega = WeightMeasure::lebesgue();
  std::size_t n = 100000;
  std::vector<double> betas{0.2, 0.35, 0.5, 0.65, 0.8};
  std::size_t trials = 200;
  double alpha = 0.05;
  double critical_value = 0.46136;
  Seed seed = 0;
  std::size_t theory_reps = 20000;
  std::size_t grid_k = 4096;

  void validate() const;
};

struct PowerMapConfig {
  std::vector<double> deltas{0.01, 0.04, 0.07, 0.10};
  std::vector<double> gammas{3.5, 6.0, 8.5, 11.75};
  std::size_t n = 100000;
  std::size_t trials = 200;
  double alpha = 0.05;
  double critical_value = 0.46136;
  Seed seed = 0;
  std::size_t theory_reps = 20000;
  std::size_t grid_k = 4096;

  void validate() const;
};

enum class ShiftFamily { sine, tail };

struct KsComparisonConfig {
  ShiftFamily family = ShiftFamily::sine;
  std::vector<double> ps{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> gammas{4.0, 7.0, 10.0};
  std::size_t n = 100000;
  std::size_t trials = 200;
  double alpha = 0.05;
  double critical_value = 0.46136;
  double ks_critical_value = 1.36;
  Seed seed = 0;

  void validate() const;
};

struct WeightComparisonConfig {
  std::vector<double> a_values{0.0, 1.0, 2.0};
  std::vector<double> ps{0.1, 0.3, 0.5};
  std::vector<double> gammas{4.0, 7.0, 10.0};
  std::size_t n = 100000;
  std::size_t trials = 200;
  double alpha = 0.05;
  /// Used for a = 0; other weights get a simulated critical value.
  double lebesgue_critical_value = 0.46136;
  std::size_t critical_reps = 100000;
  std::size_t grid_k = 4096;
  Seed seed = 0;

  void validate() const;
};

/// sine_quantile(p) with p = delta sqrt(8 pi^2), so that W_2 to Unif[0, 1] is delta.
AnalyticDistribution sine_for_delta(double delta);
AnalyticDistribution shift_family(ShiftFamily family, double p);

ResultTable run_phase_transition(const PhaseConfig& cfg);
ResultTable run_power_map(const PowerMapConfig& cfg);
ResultTable run_ks_comparison(const KsComparisonConfig& cfg);
ResultTable run_weight_comparison(const WeightComparisonConfig& cfg);

}  // namespace wshift
