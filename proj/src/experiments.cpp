#include "wshift/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "wshift/hypotest.hpp"
#include "wshift/interpolation.hpp"
#include "wshift/kernels.hpp"
#include "wshift/limitlaw.hpp"
#include "wshift/parallel.hpp"

namespace wshift {

namespace {

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

void require_common(std::size_t n, std::size_t trials, double alpha) {
  require(n >= 1, "n must be at least 1");
  require(trials >= 20, "trials must be at least 20");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
}

Metric frequency(std::string name, std::size_t hits, std::size_t trials) {
  const double v = static_cast<double>(hits) / static_cast<double>(trials);
  return {std::move(name), v, binomial_se(v, trials), trials};
}

PreparedTest decision_test(const AnalyticDistribution& p, const WeightMeasure& omega, double critical, std::size_t n) {
  TestConfig cfg;
  cfg.null_dist = p;
  cfg.omega = omega;
  cfg.critical_source = TabulatedCritical{.value = critical, .pvalue_reps = 0};
  return PreparedTest(cfg, n);
}

/// Number of null-drawn trials the test rejects. Trial seeds depend only on
/// the root seed and the trial index.
std::size_t null_rejections(const PreparedTest& test, const AnalyticDistribution& p, std::size_t trials, Seed seed) {
  std::vector<unsigned char> hit(trials);
  parallel_for(trials, [&](std::size_t t) {
    const auto s = sample(p, test.sample_size(), derive_seed(seed, "null", {t}));
    hit[t] = test.rejects(s.values());
  });
  return static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
}

nlohmann::json law_json(const AnalyticDistribution& d) { return d.name(); }

ResultTable finish(ResultTable table) {
  std::sort(table.warnings.begin(), table.warnings.end());
  table.warnings.erase(std::unique(table.warnings.begin(), table.warnings.end()), table.warnings.end());
  return table;
}

std::string fmt10(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

const Metric& ResultRow::metric(std::string_view name) const {
  for (const auto& m : metrics)
    if (m.name == name) return m;
  throw std::out_of_range("no metric named " + std::string(name));
}

const ResultRow& ResultTable::row(std::span<const double> coords) const {
  for (const auto& r : rows)
    if (std::equal(r.axis_values.begin(), r.axis_values.end(), coords.begin(), coords.end())) return r;
  std::ostringstream os;
  os << "no row at";
  for (double c : coords) os << ' ' << c;
  throw std::out_of_range(os.str());
}

std::string to_csv(const ResultTable& table) {
  std::string out;
  for (const auto& a : table.axes) out += a + ",";
  out += "metric,estimate,se,trials\n";
  for (const auto& r : table.rows) {
    std::string prefix;
    for (double v : r.axis_values) prefix += fmt10(v) + ",";
    for (const auto& m : r.metrics)
      out += prefix + m.name + "," + fmt10(m.value) + "," + fmt10(m.standard_error) + "," +
             std::to_string(m.trials) + "\n";
  }
  return out;
}

nlohmann::json to_json(const ResultTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& m : r.metrics)
      metrics[m.name] = {{"estimate", m.value}, {"se", m.standard_error}, {"trials", m.trials}};
    rows.push_back({{"axes", r.axis_values}, {"metrics", metrics}});
  }
  return {{"experiment", table.experiment},
          {"axes", table.axes},
          {"columns", {"metric", "estimate", "se", "trials"}},
          {"rows", rows},
          {"metadata", table.metadata},
          {"warnings", table.warnings}};
}

double binomial_se(double v, std::size_t trials) {
  if (trials == 0) return 0.0;
  return std::sqrt(std::max(0.0, v * (1.0 - v)) / static_cast<double>(trials));
}

double boundary_epsilon(double gamma, std::size_t n, std::vector<std::string>* warnings) {
  require(gamma >= 0.0, "gamma must be nonnegative");
  const double eps = gamma / std::sqrt(static_cast<double>(n));
  if (eps <= 1.0) return eps;
  if (warnings) {
    warnings->push_back("WARNING: epsilon_n = gamma / sqrt(n) = " + fmt10(eps) + " exceeds 1 for gamma = " +
                        fmt10(gamma) + ", n = " + std::to_string(n) + "; truncated to 1");
  }
  return 1.0;
}

std::vector<double> alternative_sample(const AnalyticDistribution& p, const AnalyticDistribution& q, double eps,
                                       std::size_t n, Seed seed) {
  require(eps >= 0.0 && eps <= 1.0, "epsilon must lie in [0, 1]");
  const auto base = sample(p, n, seed);
  std::vector<double> x(base.values().begin(), base.values().end());
  if (eps == 0.0) return x;
  const TransportMap t(p, q);
  std::vector<double> tx(n);
  for (std::size_t i = 0; i < n; ++i) tx[i] = t(x[i]);
  std::vector<double> y(n);
  kernels::axpby(1.0 - eps, x, eps, tx, y);
  return y;
}

AnalyticDistribution sine_for_delta(double delta) {
  require(delta >= 0.0, "delta must be nonnegative");
  const double p = delta * std::sqrt(8.0 * std::numbers::pi * std::numbers::pi);
  require(p <= 1.0 + 1e-12, "delta^2 must not exceed 1/(8 pi^2) so that the sine quantile stays monotone");
  return sine_quantile_distribution(std::min(p, 1.0));
}

AnalyticDistribution shift_family(ShiftFamily family, double p) {
  if (family == ShiftFamily::sine) return sine_quantile_distribution(p);
  if (p == 0.0) return uniform01();
  return tail_quantile_distribution(p);
}

void PhaseConfig::validate() const {
  require_common(n, trials, alpha);
  require(!betas.empty(), "betas must not be empty");
  for (double b : betas) require(b > 0.0 && b <= 1.0, "every beta must lie in (0, 1]");
  require(critical_value > 0.0, "critical value must be positive");
}

void PowerMapConfig::validate() const {
  require_common(n, trials, alpha);
  require(!deltas.empty() && !gammas.empty(), "deltas and gammas must not be empty");
  const double limit = 1.0 / std::sqrt(8.0 * std::numbers::pi * std::numbers::pi);
  for (double d : deltas) require(d > 0.0 && d <= limit, "every delta must lie in (0, 1/sqrt(8 pi^2)]");
  for (double g : gammas) require(g > 0.0, "every gamma must be positive");
  require(critical_value > 0.0, "critical value must be positive");
}

void KsComparisonConfig::validate() const {
  require_common(n, trials, alpha);
  require(!ps.empty() && !gammas.empty(), "ps and gammas must not be empty");
  for (double p : ps) {
    if (family == ShiftFamily::sine)
      require(p >= 0.0 && p <= 1.0, "sine parameter p must lie in [0, 1]");
    else
      require(p >= 0.0 && p <= 0.5, "tail parameter p must lie in [0, 0.5]");
  }
  for (double g : gammas) require(g >= 0.0, "every gamma must be nonnegative");
}

void WeightComparisonConfig::validate() const {
  require_common(n, trials, alpha);
  require(!a_values.empty() && !ps.empty() && !gammas.empty(), "grids must not be empty");
  for (double a : a_values) require(a >= 0.0 && a < 12.0, "every a must lie in [0, 12)");
  for (double p : ps) require(p >= 0.0 && p <= 0.5, "tail parameter p must lie in [0, 0.5]");
  for (double g : gammas) require(g >= 0.0, "every gamma must be nonnegative");
}

ResultTable run_phase_transition(const PhaseConfig& cfg) {
  cfg.validate();
  ResultTable table;
  table.experiment = "phase_transition";
  table.axes = {"beta"};
  table.metadata = {{"p", law_json(cfg.p)},         {"q", law_json(cfg.q)},
                    {"omega", cfg.omega.describe()}, {"n", cfg.n},
                    {"betas", cfg.betas},           {"trials", cfg.trials},
                    {"alpha", cfg.alpha},           {"critical_value", cfg.critical_value},
                    {"seed", cfg.seed},             {"theory_reps", cfg.theory_reps},
                    {"grid_k", cfg.grid_k}};
  if (!cfg.q.satisfies_compact_support_assumption())
    table.warnings.push_back("alternative law " + cfg.q.name() + " has unbounded support");

  const auto test = decision_test(cfg.p, cfg.omega, cfg.critical_value, cfg.n);
  const auto type1 = frequency("type1", null_rejections(test, cfg.p, cfg.trials, cfg.seed), cfg.trials);

  std::optional<LimitLawSampler::Draws> draws;
  std::optional<LimitLawSampler> sampler;
  if (cfg.theory_reps > 0) {
    sampler.emplace(
        LimitLawSampler::for_laws(cfg.p, cfg.q, cfg.omega, BridgeGrid(cfg.grid_k), derive_seed(cfg.seed, "theory")));
    draws = sampler->draw(cfg.theory_reps);
  }

  const double sqrt_n = std::sqrt(static_cast<double>(cfg.n));
  for (double beta : cfg.betas) {
    const double eps = std::min(1.0, std::pow(static_cast<double>(cfg.n), -beta));
    std::vector<unsigned char> accept(cfg.trials);
    parallel_for(cfg.trials, [&](std::size_t t) {
      const auto y = alternative_sample(cfg.p, cfg.q, eps, cfg.n, derive_seed(cfg.seed, "alt", {bits(beta), t}));
      accept[t] = !test.rejects(y);
    });
    const auto type2 =
        frequency("type2", static_cast<std::size_t>(std::count(accept.begin(), accept.end(), 1)), cfg.trials);
    ResultRow row;
    row.axis_values = {beta};
    row.metrics = {type1, type2,
                   Metric{"error_sum", type1.value + type2.value,
                          std::hypot(type1.standard_error, type2.standard_error), cfg.trials},
                   Metric{"epsilon", eps, 0.0, 0}};
    if (draws) {
      const double gamma = sqrt_n * eps;
      const double g[] = {gamma};
      const double th = theoretical_type2(*draws, g, cfg.critical_value, sampler->signal_distance_sq())[0];
      row.metrics.push_back({"theory_type2", th, binomial_se(th, cfg.theory_reps), cfg.theory_reps});
      row.metrics.push_back(
          {"theory_error_sum", cfg.alpha + th, binomial_se(th, cfg.theory_reps), cfg.theory_reps});
    }
    table.rows.push_back(std::move(row));
  }
  return finish(std::move(table));
}

ResultTable run_power_map(const PowerMapConfig& cfg) {
  cfg.validate();
  ResultTable table;
  table.experiment = "power_map";
  table.axes = {"delta", "gamma"};
  table.metadata = {{"deltas", cfg.deltas},   {"gammas", cfg.gammas},
                    {"n", cfg.n},             {"trials", cfg.trials},
                    {"alpha", cfg.alpha},     {"critical_value", cfg.critical_value},
                    {"seed", cfg.seed},       {"theory_reps", cfg.theory_reps},
                    {"grid_k", cfg.grid_k},   {"p", "uniform01"},
                    {"omega", "lebesgue"}};
  const auto p = uniform01();
  const auto omega = WeightMeasure::lebesgue();
  const auto test = decision_test(p, omega, cfg.critical_value, cfg.n);
  const auto type1 = frequency("type1", null_rejections(test, p, cfg.trials, cfg.seed), cfg.trials);

  std::vector<double> eps(cfg.gammas.size());
  for (std::size_t g = 0; g < cfg.gammas.size(); ++g) eps[g] = boundary_epsilon(cfg.gammas[g], cfg.n, &table.warnings);

  for (double delta : cfg.deltas) {
    const auto q = sine_for_delta(delta);
    std::vector<double> theory;
    if (cfg.theory_reps > 0) {
      // Same bridge seeds for every delta: common random numbers across rows.
      const auto sampler =
          LimitLawSampler::for_laws(p, q, omega, BridgeGrid(cfg.grid_k), derive_seed(cfg.seed, "theory"));
      const auto draws = sampler.draw(cfg.theory_reps);
      std::vector<double> gammas_eff(cfg.gammas.size());
      for (std::size_t g = 0; g < eps.size(); ++g) gammas_eff[g] = eps[g] * std::sqrt(static_cast<double>(cfg.n));
      theory = theoretical_type2(draws, gammas_eff, cfg.critical_value, sampler.signal_distance_sq());
    }
    for (std::size_t g = 0; g < cfg.gammas.size(); ++g) {
      const double gamma = cfg.gammas[g];
      std::vector<unsigned char> accept(cfg.trials);
      parallel_for(cfg.trials, [&](std::size_t t) {
        const auto y =
            alternative_sample(p, q, eps[g], cfg.n, derive_seed(cfg.seed, "alt", {bits(delta), bits(gamma), t}));
        accept[t] = !test.rejects(y);
      });
      ResultRow row;
      row.axis_values = {delta, gamma};
      row.metrics = {type1,
                     frequency("type2", static_cast<std::size_t>(std::count(accept.begin(), accept.end(), 1)),
                               cfg.trials)};
      if (!theory.empty())
        row.metrics.push_back({"theory_type2", theory[g], binomial_se(theory[g], cfg.theory_reps), cfg.theory_reps});
      table.rows.push_back(std::move(row));
    }
  }
  return finish(std::move(table));
}

ResultTable run_ks_comparison(const KsComparisonConfig& cfg) {
  cfg.validate();
  ResultTable table;
  table.experiment = "ks_comparison";
  table.axes = {"p", "gamma"};
  table.metadata = {{"family", cfg.family == ShiftFamily::sine ? "sine" : "tail"},
                    {"ps", cfg.ps},
                    {"gammas", cfg.gammas},
                    {"n", cfg.n},
                    {"trials", cfg.trials},
                    {"alpha", cfg.alpha},
                    {"critical_value", cfg.critical_value},
                    {"ks_critical_value", cfg.ks_critical_value},
                    {"seed", cfg.seed},
                    {"omega", "lebesgue"}};
  const auto p = uniform01();
  const auto test = decision_test(p, WeightMeasure::lebesgue(), cfg.critical_value, cfg.n);

  std::vector<unsigned char> w_null(cfg.trials), ks_null(cfg.trials);
  parallel_for(cfg.trials, [&](std::size_t t) {
    const auto s = sample(p, cfg.n, derive_seed(cfg.seed, "null", {t}));
    w_null[t] = test.rejects(s.values());
    ks_null[t] = ks_statistic(s.values(), p) > cfg.ks_critical_value;
  });
  const auto count = [](const std::vector<unsigned char>& v) {
    return static_cast<std::size_t>(std::count(v.begin(), v.end(), 1));
  };
  const auto w_type1 = frequency("type1_wasserstein", count(w_null), cfg.trials);
  const auto ks_type1 = frequency("type1_ks", count(ks_null), cfg.trials);

  for (double pp : cfg.ps) {
    const auto q = shift_family(cfg.family, pp);
    for (double gamma : cfg.gammas) {
      const double eps = boundary_epsilon(gamma, cfg.n, &table.warnings);
      std::vector<unsigned char> w_hit(cfg.trials), ks_hit(cfg.trials);
      parallel_for(cfg.trials, [&](std::size_t t) {
        const auto y = alternative_sample(p, q, eps, cfg.n, derive_seed(cfg.seed, "alt", {bits(pp), bits(gamma), t}));
        w_hit[t] = test.rejects(y);
        ks_hit[t] = ks_statistic(y, p) > cfg.ks_critical_value;
      });
      ResultRow row;
      row.axis_values = {pp, gamma};
      row.metrics = {frequency("power_wasserstein", count(w_hit), cfg.trials),
                     frequency("power_ks", count(ks_hit), cfg.trials), w_type1, ks_type1};
      table.rows.push_back(std::move(row));
    }
  }
  return finish(std::move(table));
}

ResultTable run_weight_comparison(const WeightComparisonConfig& cfg) {
  cfg.validate();
  ResultTable table;
  table.experiment = "weight_comparison";
  table.axes = {"a", "p", "gamma"};
  table.metadata = {{"a_values", cfg.a_values},
                    {"family", "tail"},
                    {"ps", cfg.ps},
                    {"gammas", cfg.gammas},
                    {"n", cfg.n},
                    {"trials", cfg.trials},
                    {"alpha", cfg.alpha},
                    {"lebesgue_critical_value", cfg.lebesgue_critical_value},
                    {"critical_reps", cfg.critical_reps},
                    {"grid_k", cfg.grid_k},
                    {"seed", cfg.seed}};
  const auto p = uniform01();
  nlohmann::json criticals = nlohmann::json::array();

  for (double a : cfg.a_values) {
    const auto omega = a == 0.0 ? WeightMeasure::lebesgue() : WeightMeasure::quadratic(a);
    double critical = cfg.lebesgue_critical_value;
    double critical_se = 0.0;
    if (a != 0.0) {
      const auto sampler =
          LimitLawSampler::for_laws(p, std::nullopt, omega, BridgeGrid(cfg.grid_k), derive_seed(cfg.seed, "critical", {bits(a)}));
      const auto cv = critical_value(sampler, cfg.alpha, cfg.critical_reps);
      critical = cv.value;
      critical_se = cv.standard_error;
    }
    criticals.push_back({{"a", a}, {"critical_value", critical}, {"standard_error", critical_se}});
    const auto test = decision_test(p, omega, critical, cfg.n);
    const auto type1 = frequency("type1", null_rejections(test, p, cfg.trials, cfg.seed), cfg.trials);

    for (double pp : cfg.ps) {
      const auto q = shift_family(ShiftFamily::tail, pp);
      for (double gamma : cfg.gammas) {
        const double eps = boundary_epsilon(gamma, cfg.n, &table.warnings);
        std::vector<unsigned char> hit(cfg.trials);
        parallel_for(cfg.trials, [&](std::size_t t) {
          const auto y =
              alternative_sample(p, q, eps, cfg.n, derive_seed(cfg.seed, "alt", {bits(pp), bits(gamma), t}));
          hit[t] = test.rejects(y);
        });
        ResultRow row;
        row.axis_values = {a, pp, gamma};
        row.metrics = {frequency("power", static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1)), cfg.trials),
                       type1, Metric{"critical_value", critical, critical_se, a == 0.0 ? 0 : cfg.critical_reps}};
        table.rows.push_back(std::move(row));
      }
    }
  }
  table.metadata["critical_values"] = criticals;
  return finish(std::move(table));
}

}  // namespace wshift
