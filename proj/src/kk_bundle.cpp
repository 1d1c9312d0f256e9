#include "kkz/kk_bundle.hpp"

#include <cmath>
#include <numbers>

#include "kkz/error.hpp"
#include "kkz/finite_difference.hpp"
#include "kkz/ode.hpp"

namespace kkz {

double chart_radius(GroupId group) noexcept {
  return group == GroupId::SU2 ? 0.5 * std::numbers::pi : std::numbers::pi;
}

BundleChart BundleChart::centered_at(const GroupElement& anchor) {
  return {anchor, chart_radius(anchor.group())};
}

LieAlgebraElement connection_form(const GaugeFieldConfig& cfg, const BundlePoint& p,
                                  const BundleVelocity& w) {
  const LieAlgebraElement av(cfg.group(), contract(cfg.potential(p.base), w.base));
  return adjoint(p.fiber.inverse(), av) + w.fiber;
}

double kk_metric(const GaugeFieldConfig& cfg, const BaseMetric& m, const BundlePoint& p,
                 const BundleVelocity& w1, const BundleVelocity& w2) {
  return m.dot(p.base, w1.base, w2.base) +
         cfg.form()(connection_form(cfg, p, w1), connection_form(cfg, p, w2));
}

namespace {

void check_chart(const GaugeFieldConfig& cfg, const BundleChart& chart) {
  if (chart.anchor.group() != cfg.group())
    fail(ErrorKind::InvalidInput, "bundle chart: group mismatch");
}

}  // namespace

Eigen::MatrixXd metric_matrix_in_chart(const GaugeFieldConfig& cfg, const BaseMetric& m,
                                       const BundleChart& chart, const ChartPoint& y) {
  check_chart(cfg, chart);
  const int d = cfg.dim();
  const int n = 4 + d;
  if (y.size() != n) fail(ErrorKind::InvalidInput, "chart point has wrong dimension");
  const AlgebraCoeffs theta = y.tail(d);
  if (!(theta.norm() < chart.radius))
    fail(ErrorKind::ChartDomain, "fiber coordinate outside the chart radius");
  const BaseEvent x = y.head<4>();

  const GroupElement g = chart.anchor * exp_map(LieAlgebraElement(cfg.group(), theta));
  const AlgebraMatrix ad_inv = adjoint_matrix(g.inverse());
  const Potential a = cfg.potential(x);

  // omega = W ydot
  Eigen::MatrixXd w(d, n);
  for (int mu = 0; mu < 4; ++mu) w.col(mu) = ad_inv * a[mu];
  w.rightCols(d) = dexp_matrix(cfg.group(), theta);

  Eigen::MatrixXd h = -cfg.form().scale() * (w.transpose() * w);
  h.topLeftCorner<4, 4>() += m.components(x);
  return h;
}

std::pair<ChartPoint, Eigen::VectorXd> to_chart(const BundleChart& chart,
                                                const BundlePoint& p,
                                                const BundleVelocity& w) {
  const GroupId group = chart.anchor.group();
  const int d = algebra_dim(group);
  const AlgebraCoeffs theta = log_map(chart.anchor.inverse() * p.fiber).coeffs();
  if (!(theta.norm() < chart.radius))
    fail(ErrorKind::ChartDomain, "bundle point outside the chart radius");
  ChartPoint y(4 + d);
  y << p.base, theta;
  Eigen::VectorXd ydot(4 + d);
  const AlgebraMatrix j = dexp_matrix(group, theta);
  ydot << w.base, j.partialPivLu().solve(w.fiber.coeffs());
  return {y, ydot};
}

Eigen::VectorXd chart_christoffel_contract(const GaugeFieldConfig& cfg,
                                           const BaseMetric& m,
                                           const BundleChart& chart,
                                           const ChartPoint& y,
                                           const Eigen::VectorXd& ydot,
                                           double fd_scale) {
  const int n = static_cast<int>(y.size());
  Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd u(n);
  for (int c = 0; c < n; ++c) {
    const double h = fd_step(y[c], fd_scale);
    ChartPoint yp = y, ym = y;
    yp[c] += h;
    ym[c] -= h;
    const Eigen::MatrixXd dh = (metric_matrix_in_chart(cfg, m, chart, yp) -
                                metric_matrix_in_chart(cfg, m, chart, ym)) /
                               (2.0 * h);
    const Eigen::VectorXd dh_ydot = dh * ydot;
    t += ydot[c] * dh_ydot;
    u[c] = ydot.dot(dh_ydot);
  }
  const Eigen::MatrixXd h = metric_matrix_in_chart(cfg, m, chart, y);
  return h.partialPivLu().solve(t - 0.5 * u);
}

BundleTrajectory integrate_bundle_geodesic(const GaugeFieldConfig& cfg,
                                           const BaseMetric& m, const BundlePoint& p0,
                                           const BundleVelocity& w0, double s_max,
                                           const BundleIntegratorOptions& options) {
  if (!(options.tol > 0.0)) fail(ErrorKind::InvalidInput, "bundle geodesic: tol must be positive");
  if (!(s_max > 0.0) || !std::isfinite(s_max))
    fail(ErrorKind::InvalidInput, "bundle geodesic: s_max must be positive");
  if (options.samples < 2) fail(ErrorKind::InvalidInput, "bundle geodesic: need >= 2 samples");
  if (p0.fiber.group() != cfg.group() || w0.fiber.group() != cfg.group())
    fail(ErrorKind::InvalidInput, "bundle geodesic: group mismatch");
  if (!p0.base.allFinite() || !w0.base.allFinite())
    fail(ErrorKind::InvalidInput, "bundle geodesic: non-finite initial data");

  const GroupId group = cfg.group();
  const int d = cfg.dim();
  const int n = 4 + d;
  BundleChart chart = BundleChart::centered_at(options.chart_anchor.value_or(p0.fiber));

  Eigen::VectorXd state(2 * n);
  try {
    const auto [y0, ydot0] = to_chart(chart, p0, w0);
    state << y0, ydot0;
  } catch (const Error& e) {
    fail(ErrorKind::Integration, std::string("bundle geodesic: initial chart: ") + e.what());
  }

  BundleTrajectory out;
  out.group = group;
  out.samples.reserve(options.samples);
  std::vector<double> grid(options.samples);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = s_max * static_cast<double>(i) / static_cast<double>(grid.size() - 1);

  auto rhs = [&](double, const Eigen::VectorXd& yy, Eigen::VectorXd& dy) {
    const auto ydot = yy.tail(n);
    dy.head(n) = ydot;
    dy.tail(n) = -chart_christoffel_contract(cfg, m, chart, yy.head(n), ydot, options.fd_scale);
  };
  auto fiber_state = [&](const Eigen::VectorXd& yy) {
    const AlgebraCoeffs theta = yy.segment(4, d);
    const GroupElement g =
        (chart.anchor * exp_map(LieAlgebraElement(group, theta))).reunitarized(1e-12);
    const AlgebraCoeffs vf = dexp_matrix(group, theta) * yy.segment(n + 4, d);
    return std::pair{g, LieAlgebraElement(group, vf)};
  };
  auto observer = [&](double s, const Eigen::VectorXd& yy) {
    auto [g, vf] = fiber_state(yy);
    out.samples.push_back({s, {yy.head<4>(), g}, {yy.segment<4>(n), vf}});
  };
  std::size_t recenterings = 0;
  auto hook = [&](double, Eigen::VectorXd& yy) {
    if (yy.segment(4, d).norm() < 0.5 * chart.radius) return false;
    auto [g, vf] = fiber_state(yy);
    chart.anchor = g;
    yy.segment(4, d).setZero();
    yy.segment(n + 4, d) = vf.coeffs();  // dexp is the identity at theta = 0
    ++recenterings;
    return true;
  };
  auto limit = [&](double, const Eigen::VectorXd& yy) {
    const double speed = yy.segment(n + 4, d).norm();
    return speed > 0.0 ? 0.25 * chart.radius / speed : std::numeric_limits<double>::infinity();
  };

  Dopri5 ode(rhs, {.rtol = options.tol, .atol = options.tol});
  try {
    ode.integrate(0.0, state, grid, observer, hook, limit);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Integration) throw;
    fail(ErrorKind::Integration, std::string("bundle geodesic: ") + to_string(e.kind()) +
                                     ": " + e.what());
  }
  out.stats = ode.stats();
  out.stats.recenterings = recenterings;
  return out;
}

ChargeSeries charge_along(const GaugeFieldConfig& cfg, const BundleTrajectory& traj) {
  ChargeSeries out;
  out.charge.reserve(traj.size());
  for (const auto& smp : traj.samples) {
    out.charge.push_back(connection_form(cfg, smp.p, smp.w));
    out.max_deviation =
        std::max(out.max_deviation, (out.charge.back() - out.charge.front()).norm());
  }
  return out;
}

Trajectory project(const BundleTrajectory& traj) {
  Trajectory out;
  out.samples.reserve(traj.size());
  for (const auto& smp : traj.samples) out.samples.push_back({smp.s, smp.p.base, smp.w.base, {}});
  out.stats = traj.stats;
  return out;
}

BundleResidual bundle_geodesic_residual(const GaugeFieldConfig& cfg, const BaseMetric& m,
                                        const BundleTrajectory& traj, double fd_scale) {
  const std::size_t count = traj.size();
  if (count < 5) fail(ErrorKind::InvalidInput, "bundle residual: need at least 5 samples");
  std::vector<double> s;
  for (const auto& smp : traj.samples) s.push_back(smp.s);
  const double h = fd::uniform_step(s);

  BundleResidual out;
  double sum2 = 0.0;
  double speed2 = 0.0;
  for (std::size_t i = 2; i + 2 < count; ++i) {
    const BundleChart chart = BundleChart::centered_at(traj.samples[i].p.fiber);
    std::vector<Eigen::VectorXd> ydot(5);
    Eigen::VectorXd y;
    for (std::size_t j = 0; j < 5; ++j) {
      const auto& smp = traj.samples[i - 2 + j];
      auto [yj, ydj] = to_chart(chart, smp.p, smp.w);
      ydot[j] = ydj;
      if (j == 2) y = yj;
    }
    const Eigen::VectorXd acc = fd::derivative(ydot, 2, h);
    const double r =
        (acc + chart_christoffel_contract(cfg, m, chart, y, ydot[2], fd_scale)).norm();
    out.index.push_back(i);
    out.residual.push_back(r);
    out.max = std::max(out.max, r);
    sum2 += r * r;
    speed2 += ydot[2].squaredNorm();
  }
  const double k = static_cast<double>(out.residual.size());
  out.rms = std::sqrt(sum2 / k);
  out.normalized = out.rms / std::max(speed2 / k, 1e-300);
  return out;
}

}  // namespace kkz
