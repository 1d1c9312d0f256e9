#pragma once

#include <span>

#include "kkz/base_geometry.hpp"
#include "kkz/gauge_field.hpp"
#include "kkz/kk_bundle.hpp"
#include "kkz/trajectory.hpp"

namespace kkz {

/// Initial data for a charged particle: position, velocity dx/ds and the
/// gauge-frame charge q.
struct ChargedState {
  BaseEvent x;
  FourVector v;
  LieAlgebraElement q;
};

/// [F]^mu_nu = g^{mu lambda}(x) k(q, F_{lambda nu}(x)).
Mat4 force_matrix(const GaugeFieldConfig& cfg, const BaseMetric& m,
                  const LieAlgebraElement& q, const BaseEvent& x);

struct MotionOptions {
  double tol = 1e-9;
  std::size_t samples = 512;
  double fd_scale = kDefaultFdScale;
  double timelike_margin = 1e-9;
  std::size_t max_steps = 5'000'000;
};

/// Integrates dv/ds + Gamma v v = [F(q, x)] v together with the charge
/// transport dq/ds = -[A_mu v^mu, q]. Samples are uniform on [0, s_max].
Trajectory integrate_charged_motion(const GaugeFieldConfig& cfg, const BaseMetric& m,
                                    const ChargedState& state0, double s_max,
                                    const MotionOptions& options = {});

/// Same equations on an explicit, uniformly spaced parameter grid starting at
/// grid.front().
Trajectory integrate_charged_motion_on(const GaugeFieldConfig& cfg, const BaseMetric& m,
                                       const ChargedState& state0,
                                       std::span<const double> grid,
                                       const MotionOptions& options = {});

struct LiftOptions {
  double tol = 1e-10;
};

/// Horizontal-plus-charge lift of a sampled base curve: solves
/// g' = g Q - (A_mu v^mu) g so that omega(gamma') = Q at every sample.
/// The base curve is interpolated with cubic Hermite polynomials between
/// samples.
BundleTrajectory geodesic_lift(const GaugeFieldConfig& cfg, const Trajectory& base,
                               const LieAlgebraElement& charge, const GroupElement& g0,
                               const LiftOptions& options = {});

struct DeviationReport {
  /// Q = omega(gamma'(0)) read from the bundle initial data.
  LieAlgebraElement charge;
  double position_deviation = 0.0;
  double velocity_deviation = 0.0;
  /// Drift of omega(gamma') along the bundle geodesic.
  double bundle_charge_drift = 0.0;
  /// Drift of h(gamma', gamma') along the bundle geodesic.
  double bundle_norm_drift = 0.0;
  /// Drift of g(v, v) and k(q, q) along the direct integration.
  double base_norm_drift = 0.0;
  double base_charge_norm_drift = 0.0;
  /// sup_s || q(s) - Ad_{g(s)} Q ||, gauge-frame charge against the bundle fiber.
  double gauge_charge_mismatch = 0.0;
  /// Largest |g(v, v) - (h(gamma', gamma') - k(Q, Q))| along the bundle run.
  double norm_split_defect = 0.0;
  BundleTrajectory bundle;
  Trajectory base;
};

/// Integrates the bundle geodesic, projects it, and compares against direct
/// integration of the projected equation of motion from the projected
/// initial state with q(0) = Ad_{g0} Q.
DeviationReport compare_projection(const GaugeFieldConfig& cfg, const BaseMetric& m,
                                   const BundlePoint& p0, const BundleVelocity& w0,
                                   double s_max, const BundleIntegratorOptions& options = {});

/// Bundle velocity at (x, g) over base velocity v whose connection value is Q.
BundleVelocity velocity_with_charge(const GaugeFieldConfig& cfg, const BundlePoint& p,
                                    const FourVector& v, const LieAlgebraElement& charge);

}  // namespace kkz
