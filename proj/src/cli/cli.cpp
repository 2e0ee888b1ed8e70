#include "wshift/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>

#include "wshift/distance.hpp"
#include "wshift/experiments.hpp"
#include "wshift/hypotest.hpp"
#include "wshift/interpolation.hpp"
#include "wshift/io.hpp"
#include "wshift/kernels.hpp"
#include "wshift/limitlaw.hpp"
#include "wshift/parallel.hpp"

namespace fs = std::filesystem;

namespace wshift {

namespace {

const std::set<std::string> kNotConfig = {"help", "config", "out"};

struct Common {
  Seed seed = 0;
  std::string config;
  std::string out = ".";
  std::string kernel = "auto";
  std::size_t threads = 0;
};

class Context {
 public:
  Context(std::string command, fs::path out_dir, std::ostream& out, std::ostream& err)
      : out_dir_(std::move(out_dir)), out(out), err(err) {
    manifest.command = std::move(command);
    manifest.tool_version = std::string(kToolVersion);
    manifest.started = utc_timestamp();
  }

  void write(const std::string& name, std::string_view contents) {
    write_file_atomic(out_dir_ / name, contents);
    manifest.outputs.push_back(name);
  }
  void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }
  void input(const fs::path& path) { manifest.input_digests[path.string()] = sha256_file(path); }
  void input_law(std::string_view spec) {
    for (const auto& p : law_inputs(spec)) input(p);
  }
  void warn(const std::string& message) { err << "warning: " << message << "\n"; }

  void finish() {
    write("run.conf", write_config(manifest.config));
    manifest.finished = utc_timestamp();
    manifest.outputs.push_back("manifest.json");
    write_file_atomic(out_dir_ / "manifest.json", manifest.to_json().dump(2) + "\n");
  }

  RunManifest manifest;

 private:
  fs::path out_dir_;

 public:
  std::ostream& out;
  std::ostream& err;
};

using Runner = std::function<int(Context&)>;

struct Command {
  CLI::App* app = nullptr;
  Common common;
  Runner run;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Root seed; every random stream is derived from it");
  sub->add_option("--config", c.config, "Flat 'key = value' file; command-line flags take precedence");
  sub->add_option("--out", c.out, "Output directory");
  sub->add_option("--kernel", c.kernel, "Numeric kernels: auto, scalar or avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
  sub->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

AnalyticDistribution analytic_law(const std::string& spec, const char* what) {
  const Law law = parse_law(spec);
  if (const auto* a = std::get_if<AnalyticDistribution>(&law)) return *a;
  throw InputError(std::string(what) + " must be an analytic family, got '" + spec + "'");
}

/// Plain file paths are read as csv:<path>:<column>.
std::string as_spec(const std::string& text, const std::string& column) {
  if (text.find(':') == std::string::npos && (text.ends_with(".csv") || fs::is_regular_file(text)))
    return "csv:" + text + ":" + column;
  return text;
}

WeightMeasure weight_with_trim(const std::string& spec, double trim) {
  const auto w = parse_weight(spec);
  if (trim == 0.0) return w;
  if (!(trim > 0.0 && trim < 0.5)) throw InputError("--trim must lie in [0, 0.5)");
  return w.trimmed(trim);
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

nlohmann::json outcome_json(const TestOutcome& o) {
  nlohmann::json j = {{"statistic", o.statistic},
                      {"critical_value", o.critical_value},
                      {"reject", o.reject},
                      {"p_value", o.p_value},
                      {"n", o.n},
                      {"provenance",
                       {{"source", o.provenance.source},
                        {"seed", o.provenance.seed},
                        {"reps", o.provenance.reps},
                        {"grid_k", o.provenance.grid_k}}},
                      {"warnings", o.warnings}};
  if (o.critical_standard_error) j["critical_standard_error"] = *o.critical_standard_error;
  return j;
}

void emit_table(Context& ctx, const ResultTable& t, const std::string& stem) {
  for (const auto& w : t.warnings) ctx.warn(w);
  ctx.write(stem + ".csv", to_csv(t));
  ctx.write_json(stem + ".json", to_json(t));
  ctx.out << "wrote " << stem << ".csv (" << t.rows.size() << " cells)\n";
}

// --- test ---

struct TestOpts {
  std::string null = "uniform01";
  std::string data;
  std::string column = "value";
  std::string weight = "lebesgue";
  std::string critical = "auto";
  double trim = 0.0;
  double alpha = 0.05;
  double critical_value = kTabulatedCritical05;
  std::size_t reps = 10000;
  std::size_t grid_k = 4096;
};

void add_test(CLI::App& app, Command& cmd, TestOpts& o) {
  auto* s = app.add_subcommand("test", "Goodness-of-fit test of a sample against a null law (exit 3 when rejected)");
  cmd.app = s;
  add_common(s, cmd.common);
  s->add_option("--null", o.null, "Null distribution specifier");
  s->add_option("--data", o.data, "CSV file with the sample")->required();
  s->add_option("--column", o.column, "Column of --data holding the values");
  s->add_option("--weight", o.weight, "Weight measure: lebesgue or quadratic:<a>");
  s->add_option("--trim", o.trim, "Restrict the weight to [trim, 1 - trim]");
  s->add_option("--alpha", o.alpha, "Test level");
  s->add_option("--critical", o.critical,
                "Critical value source: auto (tabulated for uniform01/lebesgue/alpha 0.05, else limitlaw), "
                "tabulated, limitlaw or resampling")
      ->check(CLI::IsMember({"auto", "tabulated", "limitlaw", "resampling"}));
  s->add_option("--critical-value", o.critical_value, "Value used by the tabulated source");
  s->add_option("--reps", o.reps, "Reference draws for the critical value and p-value");
  s->add_option("--grid-k", o.grid_k, "Brownian bridge grid size K (power of two)");
  cmd.run = [&o, &cmd](Context& ctx) {
    const auto null_dist = analytic_law(o.null, "--null");
    const auto omega = weight_with_trim(o.weight, o.trim);
    ctx.input(o.data);
    CsvSchema schema;
    schema.value_column = o.column;
    const auto sample = ingest_csv(o.data, schema).period("all");

    std::string source = o.critical;
    if (source == "auto") {
      const bool standard = o.null == "uniform01" && o.weight == "lebesgue" && o.trim == 0.0 && o.alpha == 0.05;
      source = standard ? "tabulated" : "limitlaw";
    }
    if (source == "tabulated" && (o.alpha != 0.05 || o.null != "uniform01" || o.weight != "lebesgue") &&
        o.critical_value == kTabulatedCritical05)
      ctx.warn("the default tabulated value belongs to uniform01, lebesgue, alpha 0.05");

    TestConfig cfg;
    cfg.null_dist = null_dist;
    cfg.omega = omega;
    cfg.alpha = o.alpha;
    const Seed seed = cmd.common.seed;
    if (source == "tabulated")
      cfg.critical_source = TabulatedCritical{o.critical_value, o.reps, o.grid_k, derive_seed(seed, "pvalue")};
    else if (source == "limitlaw")
      cfg.critical_source = LimitLawCritical{o.grid_k, o.reps, derive_seed(seed, "critical")};
    else
      cfg.critical_source = ResamplingCritical{o.reps, derive_seed(seed, "resampling")};

    const auto outcome = run_test(sample, cfg);
    for (const auto& w : outcome.warnings) ctx.warn(w);
    ctx.write_json("test.json", outcome_json(outcome));
    ctx.out << "statistic=" << format10(outcome.statistic) << " critical_value=" << format10(outcome.critical_value)
            << " reject=" << bool_text(outcome.reject) << " p_value=" << format10(outcome.p_value)
            << " n=" << outcome.n << "\n";
    return outcome.reject ? kExitRejected : kExitOk;
  };
}

// --- critval ---

struct CritOpts {
  std::string null = "uniform01";
  std::string weight = "lebesgue";
  double trim = 0.0;
  double alpha = 0.05;
  std::size_t reps = 100000;
  std::size_t grid_k = 4096;
};

void add_critval(CLI::App& app, Command& cmd, CritOpts& o) {
  auto* s = app.add_subcommand("critval", "Simulate the critical value from the null limit law");
  cmd.app = s;
  add_common(s, cmd.common);
  s->add_option("--null", o.null, "Null distribution specifier");
  s->add_option("--weight", o.weight, "Weight measure: lebesgue or quadratic:<a>");
  s->add_option("--trim", o.trim, "Restrict the weight to [trim, 1 - trim]");
  s->add_option("--alpha", o.alpha, "Test level");
  s->add_option("--reps", o.reps, "Monte Carlo replicas");
  s->add_option("--grid-k", o.grid_k, "Brownian bridge grid size K (power of two)");
  cmd.run = [&o, &cmd](Context& ctx) {
    const auto null_dist = analytic_law(o.null, "--null");
    const auto omega = weight_with_trim(o.weight, o.trim);
    const auto sampler = LimitLawSampler::for_laws(null_dist, std::nullopt, omega, BridgeGrid(o.grid_k),
                                                   derive_seed(cmd.common.seed, "critical"));
    const auto cv = critical_value(sampler, o.alpha, o.reps);
    ctx.write_json("critval.json", {{"alpha", cv.alpha},
                                    {"value", cv.value},
                                    {"standard_error", cv.standard_error},
                                    {"reps", cv.reps},
                                    {"grid_k", o.grid_k},
                                    {"null", null_dist.name()},
                                    {"weight", omega.describe()}});
    ctx.out << format10(cv.value) << "\n";
    return kExitOk;
  };
}

// --- phase ---

struct PhaseOpts {
  std::string p = "uniform01";
  std::string q = "gaussian:0,1,-8,8";
  std::string weight = "lebesgue";
  std::string betas = "0.2,0.35,0.5,0.65,0.8";
  double trim = 0.0;
  double alpha = 0.05;
  double critical_value = kTabulatedCritical05;
  std::size_t n = 100000;
  std::size_t trials = 200;
  std::size_t reps = 20000;
  std::size_t grid_k = 4096;
};

void add_phase(CLI::App& app, Command& cmd, PhaseOpts& o) {
  auto* s = app.add_subcommand("phase", "Error sum against beta for epsilon_n = n^-beta");
  cmd.app = s;
  add_common(s, cmd.common);
  s->add_option("--p", o.p, "Null distribution specifier");
  s->add_option("--q", o.q, "Alternative endpoint specifier");
  s->add_option("--weight", o.weight, "Weight measure: lebesgue or quadratic:<a>");
  s->add_option("--trim", o.trim, "Restrict the weight to [trim, 1 - trim]");
  s->add_option("--betas", o.betas, "Comma-separated beta grid in (0, 1]");
  s->add_option("--n", o.n, "Sample size");
  s->add_option("--trials", o.trials, "Trials per cell");
  s->add_option("--alpha", o.alpha, "Test level");
  s->add_option("--critical-value", o.critical_value, "Critical value of n W^2 at level alpha");
  s->add_option("--reps", o.reps, "Limit-law replicas for the theoretical column (0 disables)");
  s->add_option("--grid-k", o.grid_k, "Brownian bridge grid size K (power of two)");
  cmd.run = [&o, &cmd](Context& ctx) {
    PhaseConfig cfg;
    cfg.p = analytic_law(o.p, "--p");
    cfg.q = analytic_law(o.q, "--q");
    cfg.omega = weight_with_trim(o.weight, o.trim);
    cfg.betas = parse_real_list(o.betas);
    cfg.n = o.n;
    cfg.trials = o.trials;
    cfg.alpha = o.alpha;
    cfg.critical_value = o.critical_value;
    cfg.seed = cmd.common.seed;
    cfg.theory_reps = o.reps;
    cfg.grid_k = o.grid_k;
    emit_table(ctx, run_phase_transition(cfg), "phase");
    return kExitOk;
  };
}

// --- powermap ---

struct PowerMapOpts {
  std::string deltas = "0.01,0.04,0.07,0.1";
  std::string gammas = "3.5,6,8.5,11.75";
  double alpha = 0.05;
  double critical_value = kTabulatedCritical05;
  std::size_t n = 100000;
  std::size_t trials = 200;
  std::size_t reps = 20000;
  std::size_t grid_k = 4096;
};

void add_powermap(CLI::App& app, Command& cmd, PowerMapOpts& o) {
  auto* s = app.add_subcommand("powermap", "Type II error over (delta, gamma) at the detection boundary");
  cmd.app = s;
  add_common(s, cmd.common);
  s->add_option("--deltas", o.deltas, "Comma-separated W_2 distances, each at most 1/sqrt(8 pi^2)");
  s->add_option("--gammas", o.gammas, "Comma-separated signal strengths");
  s->add_option("--n", o.n, "Sample size");
  s->add_option("--trials", o.trials, "Trials per cell");
  s->add_option("--alpha", o.alpha, "Test level");
  s->add_option("--critical-value", o.critical_value, "Critical value of n W^2 at level alpha");
  s->add_option("--reps", o.reps, "Limit-law replicas for the theoretical column (0 disables)");
  s->add_option("--grid-k", o.grid_k, "Brownian bridge grid size K (power of two)");
  cmd.run = [&o, &cmd](Context& ctx) {
    PowerMapConfig cfg;
    cfg.deltas = parse_real_list(o.deltas);
    cfg.gammas = parse_real_list(o.gammas);
    cfg.n = o.n;
    cfg.trials = o.trials;
    cfg.alpha = o.alpha;
    cfg.critical_value = o.critical_value;
    cfg.seed = cmd.common.seed;
    cfg.theory_reps = o.reps;
    cfg.grid_k = o.grid_k;
    emit_table(ctx, run_power_map(cfg), "powermap");
    return kExitOk;
  };
}

// --- compare-ks ---

struct CompareOpts {
  std::string family = "sine";
  std::string ps = "0,0.25,0.5,0.75,1";
  std::string gammas = "4,7,10";
  std::string weights;
  double alpha = 0.05;
  double critical_value = kTabulatedCritical05;
  double ks_critical = kKsCritical05;
  std::size_t n = 100000;
  std::size_t trials = 200;
  std::size_t reps = 100000;
  std::size_t grid_k = 4096;
};

void add_compare(CLI::App& app, Command& cmd, CompareOpts& o) {
  auto* s = app.add_subcommand("compare-ks", "Power of the Wasserstein test beside the Kolmogorov-Smirnov test");
  cmd.app = s;
  add_common(s, cmd.common);
  s->add_option("--family", o.family, "Shift family: sine or tail")->check(CLI::IsMember({"sine", "tail"}));
  s->add_option("--ps", o.ps, "Comma-separated family parameters");
  s->add_option("--gammas", o.gammas, "Comma-separated signal strengths");
  s->add_option("--weights", o.weights,
                "Comma-separated quadratic weight parameters a; when set, also writes weights.csv (tail family)");
  s->add_option("--n", o.n, "Sample size");
  s->add_option("--trials", o.trials, "Trials per cell");
  s->add_option("--alpha", o.alpha, "Test level");
  s->add_option("--critical-value", o.critical_value, "Critical value of n W^2 under the Lebesgue weight");
  s->add_option("--ks-critical", o.ks_critical, "Critical value of sqrt(n) KS");
  s->add_option("--reps", o.reps, "Limit-law replicas for the critical value of each a > 0");
  s->add_option("--grid-k", o.grid_k, "Brownian bridge grid size K (power of two)");
  cmd.run = [&o, &cmd](Context& ctx) {
    KsComparisonConfig cfg;
    cfg.family = o.family == "sine" ? ShiftFamily::sine : ShiftFamily::tail;
    cfg.ps = parse_real_list(o.ps);
    cfg.gammas = parse_real_list(o.gammas);
    cfg.n = o.n;
    cfg.trials = o.trials;
    cfg.alpha = o.alpha;
    cfg.critical_value = o.critical_value;
    cfg.ks_critical_value = o.ks_critical;
    cfg.seed = cmd.common.seed;
    emit_table(ctx, run_ks_comparison(cfg), "compare_ks");
    if (!o.weights.empty()) {
      if (cfg.family != ShiftFamily::tail) throw InputError("--weights requires --family tail");
      WeightComparisonConfig w;
      w.a_values = parse_real_list(o.weights);
      w.ps = cfg.ps;
      w.gammas = cfg.gammas;
      w.n = o.n;
      w.trials = o.trials;
      w.alpha = o.alpha;
      w.lebesgue_critical_value = o.critical_value;
      w.critical_reps = o.reps;
      w.grid_k = o.grid_k;
      w.seed = cmd.common.seed;
      emit_table(ctx, run_weight_comparison(w), "weights");
    }
    return kExitOk;
  };
}

// --- interpolate ---

struct InterpOpts {
  std::string source;
  std::string target;
  std::string series;
  std::string period_column = "period";
  std::string value_column = "value";
  std::string kind = "both";
  std::size_t steps = 12;
  std::size_t grid_points = 200;
  std::size_t bins = 0;
};

double support_edge(const AnalyticDistribution& d, bool low) {
  const double e = low ? d.support_lo() : d.support_hi();
  if (std::isfinite(e)) return e;
  return d.quantile(low ? 1e-15 : 1.0 - 1e-15);
}

std::string quantile_table(const AnalyticDistribution& d, std::size_t points) {
  std::string csv = "u,quantile\n";
  for (std::size_t j = 0; j < points; ++j) {
    const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(points);
    csv += format10(u) + "," + format10(d.quantile(u)) + "\n";
  }
  return csv;
}

void add_interpolate(CLI::App& app, Command& cmd, InterpOpts& o) {
  auto* s = app.add_subcommand(
      "interpolate", "Interpolant quantile tables between two laws, and relative-distance curves");
  cmd.app = s;
  add_common(s, cmd.common);
  s->add_option("--source", o.source, "Source distribution specifier or CSV file");
  s->add_option("--target", o.target, "Target distribution specifier or CSV file");
  s->add_option("--series", o.series, "CSV of grouped observations; curve over its periods in file order");
  s->add_option("--period-column", o.period_column, "Period column of --series");
  s->add_option("--value-column", o.value_column, "Value column of CSV inputs");
  s->add_option("--kind", o.kind, "Interpolation: displacement, linear or both")
      ->check(CLI::IsMember({"displacement", "linear", "both"}));
  s->add_option("--steps", o.steps, "Interpolants per kind, endpoints included");
  s->add_option("--grid-points", o.grid_points, "Rows of each quantile table");
  s->add_option("--bins", o.bins, "Histogram bins for total variation (0 = automatic)");
  cmd.run = [&o](Context& ctx) {
    if (!o.series.empty()) {
      if (!o.source.empty() || !o.target.empty()) throw InputError("use either --series or --source/--target");
      ctx.input(o.series);
      CsvSchema schema;
      schema.period_column = o.period_column;
      schema.value_column = o.value_column;
      const auto table = ingest_csv(o.series, schema);
      if (table.periods.size() < 2) throw InputError("--series needs at least two periods");
      const auto dists = table.all_periods();
      std::optional<Binning> bins;
      if (o.bins > 0) {
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& d : dists) lo = std::min(lo, d.min()), hi = std::max(hi, d.max());
        bins = Binning::uniform(lo, hi, o.bins);
      }
      const auto w2 = relative_distance_curve(dists, CurveMetric::w2);
      const auto w1 = relative_distance_curve(dists, CurveMetric::w1);
      const auto tv = relative_distance_curve(dists, CurveMetric::tv, bins);
      std::string csv = "t,period,eps_t,w1_t,gamma_t\n";
      for (std::size_t t = 0; t < dists.size(); ++t)
        csv += std::to_string(t) + "," + table.periods[t] + "," + format10(w2[t]) + "," + format10(w1[t]) + "," +
               format10(tv[t]) + "\n";
      ctx.write("curve.csv", csv);
      ctx.out << "wrote curve.csv (" << dists.size() << " periods)\n";
      return kExitOk;
    }
    if (o.source.empty() || o.target.empty()) throw InputError("interpolate needs --source and --target, or --series");
    if (o.steps < 2) throw InputError("--steps must be at least 2");
    if (o.grid_points < 1) throw InputError("--grid-points must be at least 1");
    const auto src_spec = as_spec(o.source, o.value_column);
    const auto dst_spec = as_spec(o.target, o.value_column);
    ctx.input_law(src_spec);
    ctx.input_law(dst_spec);
    const Law source = parse_law(src_spec);
    const Law target = parse_law(dst_spec);
    const auto p = as_distribution(source);
    const auto q = as_distribution(target);
    const auto bins = Binning::uniform(std::min(support_edge(p, true), support_edge(q, true)),
                                       std::max(support_edge(p, false), support_edge(q, false)),
                                       o.bins > 0 ? o.bins : 50);
    const auto hp = histogram(p, bins);
    const double w2_total = wp_distance(p, q, 2.0), w1_total = wp_distance(p, q, 1.0);
    const double tv_total = tv_distance(hp, histogram(q, bins));
    if (!(w2_total > 0.0) || !(w1_total > 0.0) || !(tv_total > 0.0))
      throw std::domain_error("endpoints coincide under metric");

    std::vector<InterpolationKind> kinds;
    if (o.kind != "linear") kinds.push_back(InterpolationKind::displacement);
    if (o.kind != "displacement") kinds.push_back(InterpolationKind::linear);
    std::string curve = "kind,t,eps_t,w1_t,gamma_t\n";
    for (const auto kind : kinds) {
      const std::string name = kind == InterpolationKind::displacement ? "displacement" : "linear";
      for (std::size_t k = 0; k < o.steps; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(o.steps - 1);
        const auto d = InterpolationPath{source, target, kind, t}.at();
        char file[64];
        std::snprintf(file, sizeof file, "interp_%s_%02zu.csv", name.c_str(), k);
        ctx.write(file, quantile_table(d, o.grid_points));
        const double e = wp_distance(p, d, 2.0) / w2_total;
        const double w1 = wp_distance(p, d, 1.0) / w1_total;
        const double g = tv_distance(hp, histogram(d, bins)) / tv_total;
        curve += name + "," + format10(t) + "," + format10(e) + "," + format10(w1) + "," + format10(g) + "\n";
      }
    }
    ctx.write("curve.csv", curve);
    ctx.out << "wrote " << kinds.size() * o.steps << " quantile tables and curve.csv\n";
    return kExitOk;
  };
}

// --- power-resample ---

struct ResampleOpts {
  std::string reference;
  std::string target;
  std::string data;
  std::string period_column = "period";
  std::string value_column = "value";
  std::string reference_period;
  std::string target_period;
  std::string ns = "10,50,100,500";
  double alpha = 0.05;
  std::size_t pool_size = 10000;
  std::size_t trials = 100;
  std::size_t reps = 1000;
  bool no_replace = false;
};

void add_resample(CLI::App& app, Command& cmd, ResampleOpts& o) {
  auto* s = app.add_subcommand("power-resample",
                               "Power of the empirical-null resampling test over subsample sizes");
  cmd.app = s;
  add_common(s, cmd.common);
  s->add_option("--reference", o.reference, "Reference (null) specifier or CSV file");
  s->add_option("--target", o.target, "Target specifier or CSV file");
  s->add_option("--data", o.data, "CSV of grouped observations holding both periods");
  s->add_option("--period-column", o.period_column, "Period column of --data");
  s->add_option("--value-column", o.value_column, "Value column of CSV inputs");
  s->add_option("--reference-period", o.reference_period, "Period of --data used as the reference");
  s->add_option("--target-period", o.target_period, "Period of --data used as the target");
  s->add_option("--pool-size", o.pool_size, "Draws taken from analytic specifiers to form a sample");
  s->add_option("--ns", o.ns, "Comma-separated subsample sizes");
  s->add_option("--trials", o.trials, "Target subsamples per size");
  s->add_option("--reps", o.reps, "Reference subsamples for the critical value");
  s->add_option("--alpha", o.alpha, "Test level");
  s->add_flag("--no-replace", o.no_replace, "Subsample without replacement (default: with replacement)");
  cmd.run = [&o, &cmd](Context& ctx) {
    const Seed seed = cmd.common.seed;
    auto load = [&](const std::string& spec, const std::string& period, const char* label) {
      if (!o.data.empty()) {
        if (period.empty()) throw InputError(std::string("--data requires --") + label + "-period");
        CsvSchema schema;
        schema.period_column = o.period_column;
        schema.value_column = o.value_column;
        return ingest_csv(o.data, schema).period(period);
      }
      if (spec.empty()) throw InputError(std::string("missing --") + label);
      const auto full = as_spec(spec, o.value_column);
      ctx.input_law(full);
      const Law law = parse_law(full);
      if (const auto* e = std::get_if<EmpiricalDistribution>(&law)) return *e;
      return sample(std::get<AnalyticDistribution>(law), o.pool_size, derive_seed(seed, "pool", {fnv1a(label)}));
    };
    if (!o.data.empty()) ctx.input(o.data);
    const auto p0 = load(o.reference, o.reference_period, "reference");
    const auto pt = load(o.target, o.target_period, "target");
    const ResamplingOptions ropts{.with_replacement = !o.no_replace};

    std::string csv = "n,power,se,critical_value,trials\n";
    nlohmann::json rows = nlohmann::json::array();
    for (double nd : parse_real_list(o.ns)) {
      if (!(nd >= 1.0) || nd != std::floor(nd)) throw InputError("--ns entries must be positive integers");
      const auto n = static_cast<std::size_t>(nd);
      const auto r = resampling_power_detail(p0, pt, n, o.alpha, o.trials, o.reps, derive_seed(seed, "power", {n}), ropts);
      csv += std::to_string(n) + "," + format10(r.power) + "," + format10(r.standard_error) + "," +
             format10(r.critical_value) + "," + std::to_string(r.trials) + "\n";
      rows.push_back({{"n", n},
                      {"power", r.power},
                      {"se", r.standard_error},
                      {"critical_value", r.critical_value},
                      {"trials", r.trials}});
    }
    ctx.write("power_resample.csv", csv);
    ctx.write_json("power_resample.json", {{"rows", rows},
                                           {"alpha", o.alpha},
                                           {"reps", o.reps},
                                           {"with_replacement", !o.no_replace},
                                           {"reference_size", p0.size()},
                                           {"target_size", pt.size()}});
    ctx.out << "wrote power_resample.csv\n";
    return kExitOk;
  };
}

/// Long option names a subcommand accepts from a config file.
std::set<std::string> config_keys(const CLI::App* sub) {
  std::set<std::string> keys;
  for (const auto* opt : sub->get_options())
    for (const auto& l : opt->get_lnames())
      if (!kNotConfig.contains(l)) keys.insert(l);
  return keys;
}

constexpr const char* kNoDefault = "none";

/// Effective value of every configurable option after parsing.
std::map<std::string, std::string> effective_config(const CLI::App* sub) {
  std::map<std::string, std::string> cfg;
  for (const auto* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (kNotConfig.contains(name)) continue;
    const bool is_flag = opt->get_items_expected_min() == 0;
    std::string v;
    if (is_flag)
      v = opt->as<bool>() ? "true" : "false";
    else if (!opt->results().empty())
      v = opt->results().back();
    else if (opt->get_default_str() != kNoDefault)
      v = opt->get_default_str();
    cfg[name] = v;
  }
  return cfg;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args, const CLI::App& app) {
  if (args.empty()) return args;
  const CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args.front());
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  const auto keys = config_keys(sub);
  std::vector<std::string> out{args.front()};
  for (const auto& [k, v] : read_config_file(path)) {
    if (!keys.contains(k)) throw InputError("config file " + path + ": unknown key '" + k + "' for " + args.front());
    if (v.empty()) continue;
    out.push_back("--" + k + "=" + v);
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

int rerun(const std::string& manifest_path, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  std::ifstream in(manifest_path);
  if (!in) throw InputError("cannot open manifest " + manifest_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("manifest " + manifest_path + " is not valid JSON: " + e.what());
  }
  const auto m = RunManifest::from_json(j);
  for (const auto& [path, digest] : m.input_digests) {
    std::error_code ec;
    if (!fs::exists(path, ec))
      err << "warning: input " << path << " recorded in the manifest is missing\n";
    else if (sha256_file(path) != digest)
      err << "warning: input " << path << " changed since the recorded run\n";
  }
  std::vector<std::string> args{m.command};
  for (const auto& [k, v] : m.config)
    if (!v.empty()) args.push_back("--" + k + "=" + v);
  args.push_back("--out=" + out_dir);
  return run_cli(args, out, err);
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weighted Wasserstein goodness-of-fit testing for weak distribution shifts", "wshift"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  auto make = [&] { return commands.emplace_back(std::make_unique<Command>()).get(); };
  TestOpts test_o;
  CritOpts crit_o;
  PhaseOpts phase_o;
  PowerMapOpts map_o;
  CompareOpts cmp_o;
  InterpOpts interp_o;
  ResampleOpts res_o;
  add_test(app, *make(), test_o);
  add_critval(app, *make(), crit_o);
  add_phase(app, *make(), phase_o);
  add_powermap(app, *make(), map_o);
  add_compare(app, *make(), cmp_o);
  add_interpolate(app, *make(), interp_o);
  add_resample(app, *make(), res_o);

  std::string manifest_path, rerun_out = "rerun";
  auto* rerun_app = app.add_subcommand("rerun", "Repeat a recorded run from its manifest.json");
  rerun_app->add_option("--manifest", manifest_path, "Path to manifest.json")->required();
  rerun_app->add_option("--out", rerun_out, "Output directory for the repeated run");

  for (const auto& c : commands)
    for (auto* opt : c->app->get_options()) {
      if (opt->get_name() == "--help") continue;
      opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      if (opt->get_default_str().empty() && !opt->get_required() && opt->get_items_expected_min() != 0)
        opt->default_str(kNoDefault);
    }

  try {
    auto args = expand_config(raw_args, app);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (rerun_app->parsed()) return rerun(manifest_path, rerun_out, out, err);
    for (const auto& c : commands) {
      if (!c->app->parsed()) continue;
      const auto& common = c->common;
      if (common.kernel == "auto")
        kernels::use_default_kernel_level();
      else
        kernels::set_kernel_level(kernels::parse_level(common.kernel));
      worker_count_setting() = common.threads;

      Context ctx(c->app->get_name(), common.out, out, err);
      ctx.manifest.seed = common.seed;
      ctx.manifest.kernel = std::string(kernels::level_name(kernels::active_level()));
      ctx.manifest.config = effective_config(c->app);
      ctx.manifest.config["kernel"] = ctx.manifest.kernel;
      const int code = c->run(ctx);
      ctx.finish();
      return code;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitComputation;
  }
  return kExitUsage;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace wshift
