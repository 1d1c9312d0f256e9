#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kkz/base_dynamics.hpp"
#include "kkz/base_geometry.hpp"
#include "kkz/gauge_field.hpp"
#include "kkz/trajectory.hpp"

namespace kkz {

/// Chain of sampled world-line segments; segment k ends where k + 1 starts.
struct PolygonalCurve {
  std::vector<Trajectory> segments;
  /// Index (in the concatenated input) of each joint, informational.
  std::vector<std::size_t> breakpoints;
};

struct ClassifierOptions {
  double residual_threshold = 1e-4;
  double q_zero_tol = 1e-3;
  double timelike_margin = 1e-9;
  /// Consecutive segments must share their joint to this distance.
  double joint_tol = 1e-9;
  std::size_t min_samples = 9;
  std::uint64_t seed = 0;
  /// Random starts for the non-abelian shooting fit, tried after the
  /// linear estimate and Q = 0.
  int random_starts = 8;
  int max_iterations = 30;
  double shooting_tol = 1e-10;
  /// Step budget per shooting integration; exceeding it fails that trial.
  std::size_t shooting_max_steps = 20'000;
  /// Shooting only searches |Q| <= charge_bound.
  double charge_bound = 10.0;
  double fd_scale = kDefaultFdScale;
};

struct ChargeFit {
  LieAlgebraElement charge;
  /// RMS dynamics defect over interior samples divided by the mean squared
  /// Euclidean speed; +inf when the optimizer did not converge.
  double residual = 0.0;
  /// Shooting fits only: sup-norm position mismatch of the refit trajectory.
  std::optional<double> trajectory_mismatch;
  int starts_tried = 0;
  bool converged = true;
};

/// Finite-difference velocities (fourth order, one-sided at the ends) for
/// position-only input; returns the input unchanged when it has velocities.
Trajectory with_fd_velocities(const Trajectory& segment);

/// Smallest g(v, v) over the segment.
double min_timelike_margin(const BaseMetric& m, const Trajectory& segment);

/// Recovers the charge Q at the start of the segment. Abelian groups use
/// linear least squares on the pointwise equation of motion; SU(2) refines
/// by Levenberg-Marquardt shooting from several starts. A segment that is not
/// timelike throughout raises a classification error.
ChargeFit fit_charge(const GaugeFieldConfig& cfg, const BaseMetric& m, const Trajectory& segment,
                     const ClassifierOptions& options = {}, std::size_t segment_index = 0);

/// Normalized defect of the equation of motion along the segment with
/// gauge-frame charge transported from q(0) = charge.
double dynamics_residual(const GaugeFieldConfig& cfg, const BaseMetric& m,
                         const Trajectory& segment, const LieAlgebraElement& charge,
                         double fd_scale = kDefaultFdScale);

enum class CurveVerdict { ZGContinuous, GoebelContinuous, Discontinuous };
std::string to_string(CurveVerdict v);

struct SegmentReport {
  std::size_t samples = 0;
  bool timelike = false;
  double min_margin = 0.0;
  std::optional<ChargeFit> fit;
  bool accepted = false;
  std::string reason;
};

struct ClassificationReport {
  std::vector<SegmentReport> segments;
  /// |Q_{k+1} - q_k(end)| at each joint; per-segment charges are allowed to
  /// differ, this is reported only.
  std::vector<double> charge_jumps;
  CurveVerdict verdict = CurveVerdict::Discontinuous;
  ClassifierOptions tolerances;
};

/// Throws InvalidInput when the curve is malformed (too few samples,
/// non-uniform parameter, joints that do not meet).
void validate_curve(const PolygonalCurve& curve, const ClassifierOptions& options = {});

ClassificationReport classify(const GaugeFieldConfig& cfg, const BaseMetric& m,
                              const PolygonalCurve& curve, const ClassifierOptions& options = {});

struct EquivalenceReport {
  ClassificationReport classification;
  bool verdict_a = false;
  bool verdict_b = false;
  /// Normalized bundle geodesic residual of the lift of each segment;
  /// +inf where the segment failed the causal gate or could not be lifted.
  std::vector<double> lift_residuals;
  bool agree = false;
};

/// Classifies the curve, then lifts every segment with its fitted charge
/// and tests the lift for being a bundle geodesic.
EquivalenceReport equivalence_check(const GaugeFieldConfig& cfg, const BaseMetric& m,
                                    const PolygonalCurve& curve,
                                    const ClassifierOptions& options = {});

struct BreakpointOptions {
  bool detect = true;
  double jump_factor = 10.0;
  std::size_t window = 8;
};

/// Splits a flat sample list into segments. Repeated parameter values mark
/// explicit joints; without them, joints are detected where the second
/// difference of position exceeds jump_factor times its local median.
PolygonalCurve split_polygonal(const Trajectory& flat, const BreakpointOptions& options = {});

/// x' = scale * lorentz * x + shift with s' = scale * s.
struct PoincareDilatation {
  Mat4 lorentz = Mat4::Identity();
  Vec4 shift = Vec4::Zero();
  double scale = 1.0;
};

/// Boost with the given rapidity along spatial axis 1..3.
Mat4 lorentz_boost(int axis, double rapidity);
/// Rotation by angle in the (i, j) spatial plane.
Mat4 spatial_rotation(int i, int j, double angle);

Trajectory transform(const Trajectory& t, const PoincareDilatation& p);
PolygonalCurve transform(const PolygonalCurve& c, const PoincareDilatation& p);
/// A'(x') = lorentz^{-T} A(x); charged motions of the original field map to
/// charged motions of the transformed one with the same charge.
GaugeFieldConfig transform(const GaugeFieldConfig& cfg, const PoincareDilatation& p);

}  // namespace kkz
