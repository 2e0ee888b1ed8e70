#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>
#include <sys/wait.h>

#include <json.hpp>

#include "wshift/cli.hpp"
#include "wshift/distribution.hpp"
#include "wshift/io.hpp"

using namespace wshift;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("wshift_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string sample_csv(const EmpiricalDistribution& d) { return empirical_to_csv(d); }

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("two periods of three rows") {
    TempDir dir;
    write_text(dir / "obs.csv", "period,value\na,1\na,2\nb,5\na,3\nb,4\nb,6\n");
    CsvSchema schema;
    schema.period_column = "period";
    const auto t = ingest_csv(dir / "obs.csv", schema);
    CHECK(t.periods == std::vector<std::string>{"a", "b"});
    CHECK(t.period("a").size() == 3);
    CHECK(t.period("b").values()[0] == 4.0);
    CHECK(t.all_periods().size() == 2);
  }

  TEST_CASE("row errors cite line numbers") {
    TempDir dir;
    write_text(dir / "bad.csv", "value\n1.0\n2.0\nabc\n3.0\n");
    CHECK_THROWS_WITH_AS(ingest_csv(dir / "bad.csv", {}), doctest::Contains("line 4"), InputError);
    write_text(dir / "inf.csv", "value\n1.0\ninf\n");
    CHECK_THROWS_WITH_AS(ingest_csv(dir / "inf.csv", {}), doctest::Contains("line 3"), InputError);
  }

  TEST_CASE("missing column, short period and missing file") {
    TempDir dir;
    write_text(dir / "a.csv", "x,y\n1,2\n3,4\n");
    CHECK_THROWS_AS(ingest_csv(dir / "a.csv", {}), InputError);
    write_text(dir / "b.csv", "period,value\np,1\np,2\nq,3\n");
    CsvSchema schema;
    schema.period_column = "period";
    CHECK_THROWS_WITH_AS(ingest_csv(dir / "b.csv", schema), doctest::Contains("'q'"), InputError);
    CHECK_THROWS_AS(ingest_csv(dir / "none.csv", {}), InputError);
  }

  TEST_CASE("headerless, quoted and alternative delimiters") {
    TempDir dir;
    write_text(dir / "h.csv", "\xEF\xBB\xBF" "g;1.5\ng;2.5\n");
    CsvSchema schema;
    schema.header = false;
    schema.delimiter = ';';
    schema.period_column = "1";
    schema.value_column = "2";
    const auto t = ingest_csv(dir / "h.csv", schema);
    CHECK(t.period("g").size() == 2);
    CHECK(split_csv_line("\"a,b\",c,\"d\"\"e\"", ',') == std::vector<std::string>{"a,b", "c", "d\"e"});
  }

  TEST_CASE("export and re-ingest round-trips exactly") {
    TempDir dir;
    const auto d = sample(gaussian(0.0, 1.0), 500, 3);
    write_text(dir / "s.csv", empirical_to_csv(d));
    const auto back = ingest_csv(dir / "s.csv", {}).period("all");
    CHECK(std::equal(back.values().begin(), back.values().end(), d.values().begin(), d.values().end()));
  }
}

TEST_SUITE("io utilities") {
  TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    TempDir dir;
    write_text(dir / "f", "abc");
    CHECK(sha256_file(dir / "f") == sha256_hex("abc"));
  }

  TEST_CASE("atomic writes leave no temporary files") {
    TempDir dir;
    write_file_atomic(dir / "x.txt", "one");
    write_file_atomic(dir / "x.txt", "two");
    CHECK(read_text(dir / "x.txt") == "two");
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir.path)) {
      (void)e;
      ++files;
    }
    CHECK(files == 1);
    write_file_atomic(dir / "nested" / "y.txt", "z");
    CHECK(read_text(dir / "nested" / "y.txt") == "z");
  }

  TEST_CASE("config text") {
    const auto c = parse_config("# comment\n alpha = 0.1 \n\nseed=7\n");
    CHECK(c.at("alpha") == "0.1");
    CHECK(c.at("seed") == "7");
    CHECK(parse_config(write_config(c)) == c);
    CHECK_THROWS_AS(parse_config("novalue\n"), InputError);
  }

  TEST_CASE("manifest JSON round trip") {
    RunManifest m;
    m.command = "test";
    m.config = {{"alpha", "0.05"}};
    m.seed = 18446744073709551615ull;
    m.tool_version = "1.0.0";
    m.kernel = "scalar";
    m.input_digests = {{"a.csv", "00"}};
    m.outputs = {"test.json"};
    const auto back = RunManifest::from_json(m.to_json());
    CHECK(back.seed == m.seed);
    CHECK(back.config == m.config);
    CHECK(back.outputs == m.outputs);
    CHECK(back.to_json() == m.to_json());
  }

  TEST_CASE("law and weight specifiers") {
    CHECK(std::get<AnalyticDistribution>(parse_law("sine:1")).quantile(0.25) == doctest::Approx(0.409155).epsilon(1e-6));
    CHECK(std::get<AnalyticDistribution>(parse_law("gaussian:0,1,-8,8")).support_hi() == 8.0);
    CHECK(std::get<AnalyticDistribution>(parse_law("twopoint:0,1")).quantile(0.9) == 1.0);
    CHECK_THROWS_AS(parse_law("gaussian:0"), InputError);
    CHECK_THROWS_AS(parse_law("cauchy:0,1"), InputError);
    CHECK(parse_weight("quadratic:2").parameter() == 2.0);
    CHECK_THROWS_AS(parse_weight("quadratic:x"), InputError);
    CHECK(parse_real_list("0.1, 0.2,0.3") == std::vector<double>{0.1, 0.2, 0.3});
    CHECK_THROWS_AS(parse_real_list("0.1,,x"), InputError);
    TempDir dir;
    write_text(dir / "d.csv", "value\n1\n2\n");
    const auto spec = "csv:" + (dir / "d.csv").string() + ":value";
    CHECK(std::get<EmpiricalDistribution>(parse_law(spec)).size() == 2);
    CHECK(law_inputs(spec).size() == 1);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("test subcommand exit codes follow the JSON decision") {
    TempDir dir;
    write_text(dir / "null.csv", sample_csv(sample(uniform01(), 2000, 5)));
    write_text(dir / "far.csv", sample_csv(sample(uniform(0.5, 1.0), 2000, 5)));
    for (const auto* name : {"null", "far"}) {
      const auto out = dir / (std::string(name) + "_out");
      fs::create_directories(out);
      const auto r = cli({"test", "--data", (dir / (std::string(name) + ".csv")).string(), "--out", out.string(),
                          "--reps", "500", "--grid-k", "256"});
      const auto j = nlohmann::json::parse(read_text(out / "test.json"));
      CAPTURE(r.err);
      CHECK(r.code == (j.at("reject").get<bool>() ? kExitRejected : kExitOk));
      CHECK(j.at("reject").get<bool>() == (std::string(name) == "far"));
      CHECK(r.out.find("statistic=") == 0);
      CHECK(fs::exists(out / "manifest.json"));
      CHECK(fs::exists(out / "run.conf"));
    }
  }

  TEST_CASE("usage and computation errors") {
    TempDir dir;
    write_text(dir / "d.csv", sample_csv(sample(uniform01(), 50, 5)));
    const auto data = (dir / "d.csv").string();
    const auto out = dir.path.string();
    CHECK(cli({"test", "--data", data, "--bogus"}).code == kExitUsage);
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"test"}).code == kExitUsage);
    const auto bad_law = cli({"test", "--data", data, "--null", "nosuch", "--out", out});
    CHECK(bad_law.code == kExitUsage);
    CHECK(bad_law.err.rfind("error: ", 0) == 0);
    CHECK(std::count(bad_law.err.begin(), bad_law.err.end(), '\n') == 1);
    CHECK(cli({"critval", "--grid-k", "100", "--out", out}).code == kExitUsage);
    const auto comp = cli({"test", "--data", data, "--null", "gaussian:0,1", "--out", out});
    CHECK(comp.code == kExitComputation);
    CHECK(cli({"test", "--data", (dir / "none.csv").string(), "--out", out}).code == kExitUsage);
  }

  TEST_CASE("help lists every flag with its default") {
    for (const auto* sub : {"test", "critval", "phase", "powermap", "compare-ks", "interpolate", "power-resample"}) {
      const auto r = cli({sub, "--help"});
      CAPTURE(sub);
      CHECK(r.code == kExitOk);
      std::istringstream lines(r.out);
      std::string line;
      int flags = 0;
      while (std::getline(lines, line)) {
        const auto pos = line.find("--");
        if (pos == std::string::npos || line.find("--help") != std::string::npos) continue;
        if (line.find_first_not_of(' ') != pos) continue;
        ++flags;
        const bool is_flag = line.find("--no-replace") != std::string::npos || line.find("--version") != std::string::npos;
        if (!is_flag)
          CHECK_MESSAGE((line.find("[") != std::string::npos || line.find("REQUIRED") != std::string::npos), line);
      }
      CHECK(flags >= 5);
    }
  }

  TEST_CASE("config file keys are overridden by flags") {
    TempDir dir;
    write_text(dir / "run.cfg", "alpha = 0.1\nreps = 2000\ngrid-k = 128\n");
    const auto out1 = dir / "a", out2 = dir / "b";
    fs::create_directories(out1);
    fs::create_directories(out2);
    REQUIRE(cli({"critval", "--config", (dir / "run.cfg").string(), "--out", out1.string()}).code == kExitOk);
    auto conf = parse_config(read_text(out1 / "run.conf"));
    CHECK(conf.at("alpha") == "0.1");
    CHECK(conf.at("reps") == "2000");
    REQUIRE(cli({"critval", "--config", (dir / "run.cfg").string(), "--alpha", "0.2", "--out", out2.string()}).code ==
            kExitOk);
    conf = parse_config(read_text(out2 / "run.conf"));
    CHECK(conf.at("alpha") == "0.2");
    CHECK(conf.at("grid-k") == "128");
    write_text(dir / "bad.cfg", "nosuchkey = 1\n");
    CHECK(cli({"critval", "--config", (dir / "bad.cfg").string(), "--out", out2.string()}).code == kExitUsage);
  }

  TEST_CASE("interpolate writes tables and a curve with fixed endpoints") {
    TempDir dir;
    write_text(dir / "a.csv", sample_csv(sample(uniform01(), 400, 1)));
    write_text(dir / "b.csv", sample_csv(sample(uniform(0.3, 2.0), 400, 2)));
    const auto r = cli({"interpolate", "--source", (dir / "a.csv").string(), "--target", (dir / "b.csv").string(),
                        "--kind", "both", "--steps", "12", "--out", dir.path.string()});
    REQUIRE(r.code == kExitOk);
    for (const auto* kind : {"displacement", "linear"})
      for (int k = 0; k < 12; ++k) {
        char name[64];
        std::snprintf(name, sizeof name, "interp_%s_%02d.csv", kind, k);
        CHECK(fs::exists(dir / name));
      }
    std::istringstream curve(read_text(dir / "curve.csv"));
    std::string line;
    std::getline(curve, line);
    CHECK(line == "kind,t,eps_t,w1_t,gamma_t");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(curve, line)) rows.push_back(split_csv_line(line, ','));
    REQUIRE(rows.size() == 24);
    for (std::size_t start : {0u, 12u}) {
      for (int c = 2; c <= 4; ++c) {
        CHECK(std::stod(rows[start][c]) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(std::stod(rows[start + 11][c]) == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
    CHECK(std::stod(rows[6][2]) == doctest::Approx(6.0 / 11.0).epsilon(1e-6));
  }

  TEST_CASE("interpolate over a grouped series") {
    TempDir dir;
    write_text(dir / "s.csv", "month,value\nm1,0\nm1,1\nm1,2\nm2,1\nm2,2\nm2,3\nm3,2\nm3,3\nm3,4\n");
    const auto r = cli({"interpolate", "--series", (dir / "s.csv").string(), "--period-column", "month", "--out",
                        dir.path.string()});
    REQUIRE(r.code == kExitOk);
    const auto text = read_text(dir / "curve.csv");
    CHECK(text.find("1,m2,0.5,0.5,") != std::string::npos);
  }

  TEST_CASE("manifest rerun reproduces outputs bit for bit") {
    TempDir dir;
    write_text(dir / "d.csv", sample_csv(sample(uniform01(), 300, 9)));
    const auto first = dir / "first";
    fs::create_directories(first);
    REQUIRE(cli({"test", "--data", (dir / "d.csv").string(), "--critical", "resampling", "--reps", "200", "--seed",
                 "11", "--out", first.string()})
                .code <= kExitRejected);
    const auto second = dir / "second";
    fs::create_directories(second);
    const auto r = cli({"rerun", "--manifest", (first / "manifest.json").string(), "--out", second.string()});
    CHECK(r.code <= kExitRejected);
    CHECK(read_text(first / "test.json") == read_text(second / "test.json"));
    CHECK(read_text(first / "run.conf") == read_text(second / "run.conf"));
    const auto m = nlohmann::json::parse(read_text(first / "manifest.json"));
    CHECK(m.at("seed") == 11);
    CHECK(m.at("input_digests").size() == 1);
  }

  TEST_CASE("installed binary reports the same exit code") {
    const char* bin = std::getenv("WSHIFT_CLI");
    if (bin == nullptr) {
      MESSAGE("WSHIFT_CLI not set; binary check skipped");
      return;
    }
    TempDir dir;
    write_text(dir / "far.csv", sample_csv(sample(uniform(0.5, 1.0), 500, 5)));
    const std::string cmd = std::string(bin) + " test --data " + (dir / "far.csv").string() + " --reps 200 --out " +
                            dir.path.string() + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == kExitRejected);
    const int usage = std::system((std::string(bin) + " nosuch > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(usage) == kExitUsage);
  }
}
