#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "kkz/base_dynamics.hpp"
#include "kkz/error.hpp"
#include "kkz/zeeman.hpp"

namespace kkz {

inline constexpr const char* kVersion = "0.1.0";

struct RunRequest {
  /// Either a path to a JSON config or, when config_text is set, its text.
  std::string config_path;
  std::optional<std::string> config_text;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
};

struct RunResult {
  int exit_code = 0;
  /// "ok" or the error category ("config", "scenario", ...).
  std::string category = "ok";
  std::string message;
  std::string out_dir;
  /// Machine-readable summary, also on failure.
  nlohmann::ordered_json summary;
};

/// 0 for success, 2 config, 3 scenario, 4 integration, 5 classification,
/// 6 I/O.
int exit_code(ErrorKind kind);

/// Parses the config, executes the command and writes the run directory.
/// Never throws; failures are reported through the result. Nothing is
/// written unless the command completes.
RunResult run(const RunRequest& request);

/// FNV-1a 64-bit hash, lower-case hex.
std::string fnv1a_hex(const std::string& bytes);

nlohmann::ordered_json to_json(const ClassificationReport& r);
nlohmann::ordered_json to_json(const EquivalenceReport& r);
nlohmann::ordered_json to_json(const DeviationReport& r);

}  // namespace kkz
