#include "kkz/error.hpp"

namespace kkz {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput:
      return "invalid-input";
    case ErrorKind::Config:
      return "config";
    case ErrorKind::Scenario:
      return "scenario";
    case ErrorKind::Integration:
      return "integration";
    case ErrorKind::Classification:
      return "classification";
    case ErrorKind::Io:
      return "io";
    case ErrorKind::ChartDomain:
      return "chart-domain";
    case ErrorKind::Geometry:
      return "geometry";
    case ErrorKind::Lift:
      return "lift";
  }
  return "unknown";
}

}  // namespace kkz
