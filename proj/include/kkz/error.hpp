#pragma once

#include <stdexcept>
#include <string>

namespace kkz {

/// Failure categories. The numeric values of the last five double as CLI
/// exit codes.
enum class ErrorKind {
  InvalidInput = 1,
  Config = 2,
  Scenario = 3,
  Integration = 4,
  Classification = 5,
  Io = 6,
  ChartDomain = 7,
  Geometry = 8,
  Lift = 9,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace kkz
