#pragma once

#include <optional>
#include <vector>

#include "kkz/base_geometry.hpp"
#include "kkz/gauge_field.hpp"
#include "kkz/lie.hpp"
#include "kkz/trajectory.hpp"

namespace kkz {

/// Point (x, g) of the trivialized bundle P = M x G.
struct BundlePoint {
  BaseEvent base;
  GroupElement fiber;
};

/// Tangent vector at a BundlePoint; the fiber part is the left logarithmic
/// derivative g^{-1} g'.
struct BundleVelocity {
  FourVector base;
  LieAlgebraElement fiber;
};

/// Exponential chart g = anchor * exp(theta^a T_a) with ||theta|| < radius.
struct BundleChart {
  GroupElement anchor;
  double radius;

  static BundleChart centered_at(const GroupElement& anchor);
};

/// Chart radius: pi/2 for SU(2), pi for U(1).
double chart_radius(GroupId group) noexcept;

struct BundleSample {
  double s;
  BundlePoint p;
  BundleVelocity w;
};

struct BundleTrajectory {
  GroupId group = GroupId::U1;
  std::vector<BundleSample> samples;
  IntegratorStats stats;

  std::size_t size() const noexcept { return samples.size(); }
};

/// omega(w) = Ad_{g^{-1}}(A_mu(x) v^mu) + v_fiber, identity section as gauge.
LieAlgebraElement connection_form(const GaugeFieldConfig& cfg, const BundlePoint& p,
                                  const BundleVelocity& w);

/// h(w1, w2) = g(v1, v2) + k(omega(w1), omega(w2)).
double kk_metric(const GaugeFieldConfig& cfg, const BaseMetric& m, const BundlePoint& p,
                 const BundleVelocity& w1, const BundleVelocity& w2);

/// Chart coordinates y = (x^0..x^3, theta^1..theta^d).
using ChartPoint = Eigen::VectorXd;

/// h_AB(y), a (4 + d) x (4 + d) symmetric matrix. Throws ChartDomain when
/// ||theta|| >= chart.radius.
Eigen::MatrixXd metric_matrix_in_chart(const GaugeFieldConfig& cfg, const BaseMetric& m,
                                       const BundleChart& chart, const ChartPoint& y);

/// Chart coordinates and coordinate velocity of (p, w) in `chart`.
std::pair<ChartPoint, Eigen::VectorXd> to_chart(const BundleChart& chart,
                                                const BundlePoint& p,
                                                const BundleVelocity& w);

/// Gamma^A_{BC}(y) ydot^B ydot^C from central differences of the chart metric.
Eigen::VectorXd chart_christoffel_contract(const GaugeFieldConfig& cfg,
                                           const BaseMetric& m,
                                           const BundleChart& chart,
                                           const ChartPoint& y,
                                           const Eigen::VectorXd& ydot,
                                           double fd_scale = kDefaultFdScale);

struct BundleIntegratorOptions {
  double tol = 1e-9;
  std::size_t samples = 512;
  double fd_scale = kDefaultFdScale;
  /// Initial chart anchor; defaults to the initial fiber point.
  std::optional<GroupElement> chart_anchor;
};

/// Geodesic of (P, h) from the chart geodesic equation with finite-difference
/// Christoffel symbols. The chart is re-centered whenever ||theta|| reaches
/// half the chart radius. Uses nothing from the projection theorem.
BundleTrajectory integrate_bundle_geodesic(const GaugeFieldConfig& cfg,
                                           const BaseMetric& m, const BundlePoint& p0,
                                           const BundleVelocity& w0, double s_max,
                                           const BundleIntegratorOptions& options = {});

struct ChargeSeries {
  std::vector<LieAlgebraElement> charge;
  /// max_i ||omega_i - omega_0||
  double max_deviation = 0.0;
};

ChargeSeries charge_along(const GaugeFieldConfig& cfg, const BundleTrajectory& traj);

/// Drops the fiber; the base velocity is copied and no charge is attached.
Trajectory project(const BundleTrajectory& traj);

struct BundleResidual {
  std::vector<std::size_t> index;
  std::vector<double> residual;
  double max = 0.0;
  double rms = 0.0;
  /// rms / mean ||ydot||^2 over the evaluated samples.
  double normalized = 0.0;
};

/// |y'' + Gamma y' y'| at interior samples in a chart centered on each sample,
/// accelerations from fourth-order differences of the stored velocities.
/// Requires at least 5 uniformly spaced samples.
BundleResidual bundle_geodesic_residual(const GaugeFieldConfig& cfg, const BaseMetric& m,
                                        const BundleTrajectory& traj,
                                        double fd_scale = kDefaultFdScale);

}  // namespace kkz
