#pragma once

// Command-line driver: argument parsing, dispatch to the library, and
// deterministic JSON / CSV emission.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace apkit::cli {

inline constexpr const char* kToolName = "apkit";
inline constexpr const char* kToolVersion = "0.1.0";

/// Exit statuses; stable across releases.
enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kInvalidArgument = 2,
  kBudgetExceeded = 3,
  kVerificationFailed = 4,
};

enum class Format { json, csv };

/// Output of one command: scalar results plus an optional table.
struct Report {
  nlohmann::json result = nlohmann::json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
  bool verification_failed = false;
};

/// Everything needed to reproduce a run; embedded in every output file.
struct RunSpec {
  std::string command;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  bool timing = false;
  double wall_time_ms = 0.0;
};

/// JSON with sorted keys, two-space indentation, doubles printed with 17
/// significant digits and non-finite values as null.
void write_json(std::ostream& out, const nlohmann::json& value);

/// RFC-4180 field quoting.
std::string csv_field(const nlohmann::json& value);

/// Serializes header and report. CSV puts the header and scalar results on
/// '#' lines before the column row.
void emit_report(std::ostream& out, const RunSpec& spec, const Report& report, Format format);

/// Named sub-stream identifier (FNV-1a of the name).
std::uint64_t stream_id(std::string_view name) noexcept;

/// Full driver: parses args (without the program name), runs, writes the
/// artifact to --output or `out`, and error objects to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace apkit::cli
