#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "kkz/trajectory.hpp"

namespace kkz {

/// Relative finite-difference step used throughout: h = scale * (1 + |x|)
/// per coordinate.
constexpr double kDefaultFdScale = 1e-5;

inline double fd_step(double coordinate, double scale) {
  return scale * (1.0 + std::abs(coordinate));
}

/// Lorentzian base metric with signature (+,-,-,-). Either flat Minkowski or
/// a user-supplied diagonal evaluator.
class BaseMetric {
 public:
  using DiagonalFn = std::function<Vec4(const BaseEvent&)>;
  using DomainFn = std::function<bool(const BaseEvent&)>;

  static BaseMetric minkowski();
  static BaseMetric diagonal(std::string name, DiagonalFn diag,
                             DomainFn domain = {});
  /// g_00 = exp(2 a x^1), spatial part -1.
  static BaseMetric exp_lapse(double a);
  /// g_00 = 1 + a x^1 on the half space 1 + a x^1 > 0, spatial part -1.
  static BaseMetric linear_lapse(double a);

  bool is_minkowski() const noexcept { return !diag_; }
  const std::string& name() const noexcept { return name_; }
  bool in_domain(const BaseEvent& x) const;

  /// Throws ChartDomain outside the domain and Geometry if the evaluator
  /// does not return a Lorentzian diagonal.
  Mat4 components(const BaseEvent& x) const;
  Mat4 inverse(const BaseEvent& x) const;
  double dot(const BaseEvent& x, const FourVector& u, const FourVector& v) const;

 private:
  BaseMetric(std::string name, DiagonalFn diag, DomainFn domain)
      : name_(std::move(name)), diag_(std::move(diag)), domain_(std::move(domain)) {}

  std::string name_;
  DiagonalFn diag_;
  DomainFn domain_;
};

inline Mat4 metric_components(const BaseMetric& m, const BaseEvent& x) {
  return m.components(x);
}

/// Gamma^mu_{nu lambda} stored as gamma[mu](nu, lambda).
using Christoffel = std::array<Mat4, 4>;

/// Exactly zero for Minkowski; central finite differences otherwise.
Christoffel christoffel(const BaseMetric& m, const BaseEvent& x,
                        double fd_scale = kDefaultFdScale);

/// Gamma^mu_{nu lambda} v^nu v^lambda.
Vec4 contract(const Christoffel& gamma, const FourVector& v);

struct GeodesicResidual {
  /// Sample index of each entry in `residual`.
  std::vector<std::size_t> index;
  std::vector<double> residual;
  double max = 0.0;
};

/// |a + Gamma v v| at interior samples, with the acceleration taken from a
/// fourth-order central difference of the stored velocities. Requires at
/// least 5 uniformly spaced samples.
GeodesicResidual geodesic_residual(const BaseMetric& m, const Trajectory& traj,
                                   double fd_scale = kDefaultFdScale);

enum class CausalKind { Timelike, Null, Spacelike };

struct CausalCharacter {
  CausalKind kind;
  double norm;  // g(v, v)
};

CausalCharacter causal_character(const BaseMetric& m, const BaseEvent& x,
                                 const FourVector& v, double margin = 1e-9);

const char* to_string(CausalKind kind) noexcept;

}  // namespace kkz
