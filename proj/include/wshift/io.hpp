#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wshift/distribution.hpp"
#include "wshift/rng.hpp"
#include "wshift/weight.hpp"

namespace wshift {

/// Bad input from the user: malformed files, specifiers or flag values.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvSchema {
  /// Column holding the period label; empty means one period named "all".
  std::string period_column;
  std::string value_column = "value";
  char delimiter = ',';
  /// Without a header row, columns are named by their 1-based position.
  bool header = true;
};

struct ObservationTable {
  /// Period labels in order of first appearance.
  std::vector<std::string> periods;
  std::map<std::string, std::vector<double>> values;

  EmpiricalDistribution period(const std::string& label) const;
  std::vector<EmpiricalDistribution> all_periods() const;
};

/// Splits one CSV record; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line, char delimiter);

/// Parses the file; every period must have at least 2 observations.
/// Throws InputError naming the line of any unparsable value.
ObservationTable ingest_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// One header line `value` then the sorted values with 17 significant digits.
std::string empirical_to_csv(const EmpiricalDistribution& d, const std::string& column = "value");

/// Formats with 10 significant digits.
std::string format10(double v);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

/// Flat `key = value` lines; `#` starts a comment; blank lines ignored.
std::map<std::string, std::string> parse_config(std::string_view text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
std::string write_config(const std::map<std::string, std::string>& config);

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  Seed seed = 0;
  std::string tool_version;
  std::string kernel;
  std::map<std::string, std::string> input_digests;
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// Current UTC time as ISO 8601 with seconds.
std::string utc_timestamp();

/// Distribution specifiers:
///   uniform01 | uniform:<lo>,<hi> | gaussian:<mean>,<sd>[,<lo>,<hi>] |
///   sine:<p> | tailq:<p> | twopoint:<lo>,<hi> | point:<x> | csv:<path>:<column>
/// Throws InputError on malformed text.
Law parse_law(std::string_view spec);
/// Files read by a specifier (empty for analytic families).
std::vector<std::filesystem::path> law_inputs(std::string_view spec);

/// lebesgue | quadratic:<a>
WeightMeasure parse_weight(std::string_view spec);

/// Comma-separated reals.
std::vector<double> parse_real_list(std::string_view text);

}  // namespace wshift
