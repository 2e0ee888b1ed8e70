#include "wshift/io.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace wshift {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

double real_or_throw(std::string_view text, std::string_view what) {
  double v = 0.0;
  if (!parse_double(text, v))
    throw InputError("could not parse '" + std::string(text) + "' as a number in " + std::string(what));
  return v;
}

std::vector<double> real_args(std::string_view text, std::string_view spec) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto piece = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    out.push_back(real_or_throw(piece, spec));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string to_hex(const unsigned char* data, std::size_t n) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = digits[data[i] >> 4];
    out[2 * i + 1] = digits[data[i] & 0xF];
  }
  return out;
}

struct DigestCtx {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};
  DigestCtx() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("SHA-256 initialisation failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw std::runtime_error("SHA-256 update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) throw std::runtime_error("SHA-256 finalisation failed");
    return to_hex(md, len);
  }
};

}  // namespace

EmpiricalDistribution ObservationTable::period(const std::string& label) const {
  const auto it = values.find(label);
  if (it == values.end()) throw InputError("no period named '" + label + "' in the observation table");
  return EmpiricalDistribution(it->second);
}

std::vector<EmpiricalDistribution> ObservationTable::all_periods() const {
  std::vector<EmpiricalDistribution> out;
  out.reserve(periods.size());
  for (const auto& p : periods) out.push_back(period(p));
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

namespace {

void strip_bom(std::string& line) {
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
}

}  // namespace

ObservationTable ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const std::string where = path.string();

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  if (schema.header) {
    while (std::getline(in, line)) {
      if (++line_no == 1) strip_bom(line);
      if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw InputError(where + ": missing header row");
    for (auto& f : split_csv_line(line, schema.delimiter)) names.emplace_back(trim(f));
  }
  auto column_index = [&](const std::string& name) -> std::size_t {
    if (schema.header) {
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) throw InputError(where + ": missing column '" + name + "'");
      return static_cast<std::size_t>(it - names.begin());
    }
    double pos = 0.0;
    if (!parse_double(name, pos) || pos < 1.0 || pos != std::floor(pos))
      throw InputError(where + ": without a header, columns are named by 1-based position, got '" + name + "'");
    return static_cast<std::size_t>(pos) - 1;
  };
  const std::size_t vcol = column_index(schema.value_column);
  const bool grouped = !schema.period_column.empty();
  const std::size_t pcol = grouped ? column_index(schema.period_column) : 0;

  ObservationTable table;
  std::vector<std::string> errors;
  while (std::getline(in, line)) {
    if (++line_no == 1) strip_bom(line);
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line, schema.delimiter);
    const std::size_t need = std::max(vcol, grouped ? pcol : 0) + 1;
    if (fields.size() < need) {
      errors.push_back("line " + std::to_string(line_no) + ": expected at least " + std::to_string(need) +
                       " fields, found " + std::to_string(fields.size()));
      continue;
    }
    double v = 0.0;
    if (!parse_double(fields[vcol], v) || !std::isfinite(v)) {
      errors.push_back("line " + std::to_string(line_no) + ": value '" + std::string(trim(fields[vcol])) +
                       "' in column '" + schema.value_column + "' is not a finite number");
      continue;
    }
    const std::string label = grouped ? std::string(trim(fields[pcol])) : "all";
    auto [it, inserted] = table.values.try_emplace(label);
    if (inserted) table.periods.push_back(label);
    it->second.push_back(v);
  }
  if (!errors.empty()) {
    std::string msg = where + ": " + std::to_string(errors.size()) + " bad row(s): " + errors.front();
    for (std::size_t i = 1; i < std::min<std::size_t>(errors.size(), 5); ++i) msg += "; " + errors[i];
    throw InputError(msg);
  }
  if (table.periods.empty()) throw InputError(where + ": no data rows");
  for (const auto& p : table.periods)
    if (table.values[p].size() < 2)
      throw InputError(where + ": period '" + p + "' has fewer than 2 observations");
  return table;
}

std::string empirical_to_csv(const EmpiricalDistribution& d, const std::string& column) {
  std::string out = column + "\n";
  char buf[40];
  for (double v : d.values()) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    out += buf;
  }
  return out;
}

std::string format10(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string sha256_hex(std::string_view bytes) {
  DigestCtx d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  DigestCtx d;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) d.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

std::map<std::string, std::string> parse_config(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InputError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty key");
    out[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string write_config(const std::map<std::string, std::string>& config) {
  std::string out;
  for (const auto& [k, v] : config) out += k + " = " + v + "\n";
  return out;
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},
          {"config", config},
          {"seed", seed},
          {"tool_version", tool_version},
          {"kernel", kernel},
          {"input_digests", input_digests},
          {"started", started},
          {"finished", finished},
          {"outputs", outputs}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config").get<std::map<std::string, std::string>>();
  m.seed = j.value("seed", Seed{0});
  m.tool_version = j.value("tool_version", "");
  m.kernel = j.value("kernel", "");
  m.input_digests = j.value("input_digests", std::map<std::string, std::string>{});
  m.started = j.value("started", "");
  m.finished = j.value("finished", "");
  m.outputs = j.value("outputs", std::vector<std::string>{});
  return m;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

Law parse_law(std::string_view spec) {
  spec = trim(spec);
  const auto colon = spec.find(':');
  const auto head = spec.substr(0, colon);
  const auto rest = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  const std::string s(spec);
  auto args = [&](std::size_t lo, std::size_t hi) {
    if (rest.empty()) throw InputError("distribution '" + s + "' needs parameters");
    auto v = real_args(rest, s);
    if (v.size() < lo || v.size() > hi) throw InputError("distribution '" + s + "' has the wrong number of parameters");
    return v;
  };
  auto wrap = [&](auto&& make) -> Law {
    try {
      return make();
    } catch (const std::invalid_argument& e) {
      throw InputError("distribution '" + s + "': " + e.what());
    }
  };

  if (head == "uniform01") {
    if (!rest.empty()) throw InputError("uniform01 takes no parameters");
    return uniform01();
  }
  if (head == "uniform") {
    const auto v = args(2, 2);
    return wrap([&] { return uniform(v[0], v[1]); });
  }
  if (head == "gaussian") {
    const auto v = args(2, 4);
    if (v.size() == 3) throw InputError("gaussian takes mean,sd or mean,sd,lo,hi");
    if (v.size() == 2) return wrap([&] { return gaussian(v[0], v[1]); });
    return wrap([&] { return truncated_gaussian(v[0], v[1], v[2], v[3]); });
  }
  if (head == "sine") {
    const auto v = args(1, 1);
    return wrap([&] { return sine_quantile_distribution(v[0]); });
  }
  if (head == "tailq") {
    const auto v = args(1, 1);
    return wrap([&] { return tail_quantile_distribution(v[0]); });
  }
  if (head == "twopoint") {
    const auto v = args(2, 2);
    return wrap([&] { return two_point(v[0], v[1]); });
  }
  if (head == "point") {
    const auto v = args(1, 1);
    return wrap([&] { return point_mass(v[0]); });
  }
  if (head == "csv") {
    const auto last = rest.rfind(':');
    if (rest.empty() || last == std::string_view::npos || last == 0 || last + 1 == rest.size())
      throw InputError("expected csv:<path>:<column>, got '" + s + "'");
    CsvSchema schema;
    schema.value_column = std::string(rest.substr(last + 1));
    const auto table = ingest_csv(std::string(rest.substr(0, last)), schema);
    return table.period("all");
  }
  throw InputError("unknown distribution '" + s + "'");
}

std::vector<std::filesystem::path> law_inputs(std::string_view spec) {
  spec = trim(spec);
  if (!spec.starts_with("csv:")) return {};
  const auto rest = spec.substr(4);
  const auto last = rest.rfind(':');
  if (last == std::string_view::npos) return {};
  return {std::filesystem::path(std::string(rest.substr(0, last)))};
}

WeightMeasure parse_weight(std::string_view spec) {
  spec = trim(spec);
  if (spec == "lebesgue") return WeightMeasure::lebesgue();
  if (spec.starts_with("quadratic:")) {
    const double a = real_or_throw(spec.substr(10), spec);
    try {
      return WeightMeasure::quadratic(a);
    } catch (const std::invalid_argument& e) {
      throw InputError("weight '" + std::string(spec) + "': " + e.what());
    }
  }
  throw InputError("unknown weight '" + std::string(spec) + "'; expected lebesgue or quadratic:<a>");
}

std::vector<double> parse_real_list(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw InputError("empty list");
  return real_args(text, text);
}

}  // namespace wshift
