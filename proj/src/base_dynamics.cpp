#include "kkz/base_dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "kkz/error.hpp"
#include "kkz/ode.hpp"

namespace kkz {

Mat4 force_matrix(const GaugeFieldConfig& cfg, const BaseMetric& m,
                  const LieAlgebraElement& q, const BaseEvent& x) {
  if (q.group() != cfg.group()) fail(ErrorKind::InvalidInput, "force_matrix: group mismatch");
  const CurvatureValue f = curvature(cfg, x);
  Mat4 lowered = Mat4::Zero();
  for (int la = 0; la < 4; ++la)
    for (int nu = la + 1; nu < 4; ++nu) {
      const double value = cfg.form().eval(q.coeffs(), f(la, nu));
      lowered(la, nu) = value;
      lowered(nu, la) = -value;
    }
  const Mat4 g = m.components(x);
  if (!(std::abs(g.determinant()) > 0.0))
    fail(ErrorKind::Geometry, "force_matrix: singular base metric");
  return m.inverse(x) * lowered;
}

BundleVelocity velocity_with_charge(const GaugeFieldConfig& cfg, const BundlePoint& p,
                                    const FourVector& v, const LieAlgebraElement& charge) {
  const LieAlgebraElement av(cfg.group(), contract(cfg.potential(p.base), v));
  return {v, charge - adjoint(p.fiber.inverse(), av)};
}

// ---------------------------------------------------------------------------

Trajectory integrate_charged_motion_on(const GaugeFieldConfig& cfg, const BaseMetric& m,
                                       const ChargedState& state0,
                                       std::span<const double> grid,
                                       const MotionOptions& options) {
  if (!(options.tol > 0.0)) fail(ErrorKind::InvalidInput, "charged motion: tol must be positive");
  if (grid.size() < 2) fail(ErrorKind::InvalidInput, "charged motion: need >= 2 samples");
  if (state0.q.group() != cfg.group())
    fail(ErrorKind::InvalidInput, "charged motion: charge group mismatch");
  if (!state0.x.allFinite() || !state0.v.allFinite())
    fail(ErrorKind::InvalidInput, "charged motion: non-finite initial state");

  const int d = cfg.dim();
  const GroupId group = cfg.group();
  try {
    if (causal_character(m, state0.x, state0.v, options.timelike_margin).kind !=
        CausalKind::Timelike)
      fail(ErrorKind::InvalidInput, "charged motion: initial velocity is not timelike");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidInput) throw;
    fail(ErrorKind::Integration, std::string("charged motion: ") + e.what());
  }

  Eigen::VectorXd y(8 + d);
  y << state0.x, state0.v, state0.q.coeffs();

  auto rhs = [&](double, const Eigen::VectorXd& yy, Eigen::VectorXd& dy) {
    const BaseEvent x = yy.head<4>();
    const FourVector v = yy.segment<4>(4);
    const AlgebraCoeffs q = yy.tail(d);
    const LieAlgebraElement charge(group, q);
    Vec4 acc = force_matrix(cfg, m, charge, x) * v;
    if (!m.is_minkowski()) acc -= contract(christoffel(m, x, options.fd_scale), v);
    dy.head<4>() = v;
    dy.segment<4>(4) = acc;
    if (group == GroupId::U1) {
      dy.tail(d).setZero();
    } else {
      const LieAlgebraElement av(group, contract(cfg.potential(x), v));
      dy.tail(d) = -(ad_matrix(av) * q);
    }
  };

  Trajectory out;
  out.samples.reserve(grid.size());
  auto observer = [&](double s, const Eigen::VectorXd& yy) {
    out.samples.push_back({s, yy.head<4>(), yy.segment<4>(4), yy.tail(d)});
  };
  auto hook = [&](double s, Eigen::VectorXd& yy) {
    const double n = m.dot(yy.head<4>(), yy.segment<4>(4), yy.segment<4>(4));
    if (!(n > options.timelike_margin))
      fail(ErrorKind::Integration,
           "charged motion: velocity lost timelike character at s = " + std::to_string(s));
    return false;
  };

  Dopri5 ode(rhs, {.rtol = options.tol, .atol = options.tol, .max_steps = options.max_steps});
  try {
    ode.integrate(grid.front(), y, grid, observer, hook);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Integration) throw;
    fail(ErrorKind::Integration,
         std::string("charged motion: ") + to_string(e.kind()) + ": " + e.what());
  }
  out.stats = ode.stats();
  return out;
}

Trajectory integrate_charged_motion(const GaugeFieldConfig& cfg, const BaseMetric& m,
                                    const ChargedState& state0, double s_max,
                                    const MotionOptions& options) {
  if (!(s_max > 0.0) || !std::isfinite(s_max))
    fail(ErrorKind::InvalidInput, "charged motion: s_max must be positive");
  if (options.samples < 2) fail(ErrorKind::InvalidInput, "charged motion: need >= 2 samples");
  std::vector<double> grid(options.samples);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = s_max * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
  return integrate_charged_motion_on(cfg, m, state0, grid, options);
}

// ---------------------------------------------------------------------------

namespace {

// Cubic Hermite interpolation of (x, v = dx/ds) between samples.
class HermiteCurve {
 public:
  explicit HermiteCurve(const Trajectory& t) : t_(t) {}

  std::pair<BaseEvent, FourVector> operator()(double s) const {
    const auto& smp = t_.samples;
    auto it = std::upper_bound(smp.begin(), smp.end(), s,
                               [](double v, const TrajectorySample& a) { return v < a.s; });
    std::size_t i = it == smp.begin() ? 0 : static_cast<std::size_t>(it - smp.begin()) - 1;
    i = std::min(i, smp.size() - 2);
    const auto& a = smp[i];
    const auto& b = smp[i + 1];
    const double h = b.s - a.s;
    const double u = (s - a.s) / h;
    const double u2 = u * u, u3 = u2 * u;
    const BaseEvent x = (2 * u3 - 3 * u2 + 1) * a.x + (u3 - 2 * u2 + u) * h * a.v +
                        (-2 * u3 + 3 * u2) * b.x + (u3 - u2) * h * b.v;
    const FourVector v = ((6 * u2 - 6 * u) * a.x + (-6 * u2 + 6 * u) * b.x) / h +
                         (3 * u2 - 4 * u + 1) * a.v + (3 * u2 - 2 * u) * b.v;
    return {x, v};
  }

 private:
  const Trajectory& t_;
};

Eigen::VectorXd pack(const GroupMatrix& g) {
  Eigen::VectorXd out(2 * g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    out[2 * i] = g.data()[i].real();
    out[2 * i + 1] = g.data()[i].imag();
  }
  return out;
}

GroupMatrix unpack(const Eigen::VectorXd& y, int n) {
  GroupMatrix g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = cplx(y[2 * i], y[2 * i + 1]);
  return g;
}

}  // namespace

BundleTrajectory geodesic_lift(const GaugeFieldConfig& cfg, const Trajectory& base,
                               const LieAlgebraElement& charge, const GroupElement& g0,
                               const LiftOptions& options) {
  const GroupId group = cfg.group();
  if (charge.group() != group || g0.group() != group)
    fail(ErrorKind::Lift, "geodesic_lift: group mismatch");
  if (base.size() < 2 || !base.has_velocity)
    fail(ErrorKind::Lift, "geodesic_lift: base trajectory needs >= 2 samples with velocities");
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto& smp = base.samples[i];
    if (!smp.x.allFinite() || !smp.v.allFinite())
      fail(ErrorKind::Lift, "geodesic_lift: non-finite base sample");
    if (i > 0 && !(smp.s > base.samples[i - 1].s))
      fail(ErrorKind::Lift, "geodesic_lift: parameter is not increasing");
  }

  const int n = rep_dim(group);
  const GroupMatrix qm = charge.matrix();
  const HermiteCurve curve(base);

  auto rhs = [&](double s, const Eigen::VectorXd& yy, Eigen::VectorXd& dy) {
    const auto [x, v] = curve(s);
    const GroupMatrix av = LieAlgebraElement(group, contract(cfg.potential(x), v)).matrix();
    const GroupMatrix g = unpack(yy, n);
    dy = pack(g * qm - av * g);
  };

  BundleTrajectory out;
  out.group = group;
  out.samples.reserve(base.size());
  std::size_t k = 0;
  auto observer = [&](double s, const Eigen::VectorXd& yy) {
    const GroupElement g = GroupElement::project(group, unpack(yy, n));
    const auto& smp = base.samples[k++];
    BundlePoint p{smp.x, g};
    out.samples.push_back({s, p, velocity_with_charge(cfg, p, smp.v, charge)});
  };
  auto hook = [&](double, Eigen::VectorXd& yy) {
    const GroupMatrix m = unpack(yy, n);
    if (!m.allFinite()) fail(ErrorKind::Lift, "geodesic_lift: non-finite fiber");
    const double defect = (m.adjoint() * m - GroupMatrix::Identity(n, n)).norm();
    if (defect <= 1e-12) return false;
    yy = pack(GroupElement::project(group, m).matrix());
    return true;
  };

  std::vector<double> grid;
  grid.reserve(base.size());
  for (const auto& smp : base.samples) grid.push_back(smp.s);

  Dopri5 ode(rhs, {.rtol = options.tol, .atol = options.tol});
  try {
    ode.integrate(grid.front(), pack(g0.matrix()), grid, observer, hook);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Lift) throw;
    fail(ErrorKind::Lift, std::string("geodesic_lift: ") + e.what());
  }
  out.stats = ode.stats();
  return out;
}

// ---------------------------------------------------------------------------

DeviationReport compare_projection(const GaugeFieldConfig& cfg, const BaseMetric& m,
                                   const BundlePoint& p0, const BundleVelocity& w0,
                                   double s_max, const BundleIntegratorOptions& options) {
  const LieAlgebraElement q_bundle = connection_form(cfg, p0, w0);
  DeviationReport r{.charge = q_bundle, .bundle = {}, .base = {}};
  r.bundle = integrate_bundle_geodesic(cfg, m, p0, w0, s_max, options);

  const ChargedState start{p0.base, w0.base, adjoint(p0.fiber, q_bundle)};
  r.base = integrate_charged_motion(
      cfg, m, start, s_max,
      {.tol = options.tol, .samples = options.samples, .fd_scale = options.fd_scale});

  if (r.base.size() != r.bundle.size())
    fail(ErrorKind::Integration, "compare_projection: sample count mismatch");

  const double kqq = cfg.form()(q_bundle, q_bundle);
  const auto& b0 = r.bundle.samples.front();
  const double h0 = kk_metric(cfg, m, b0.p, b0.w, b0.w);
  const auto& s0 = r.base.samples.front();
  const double g0 = m.dot(s0.x, s0.v, s0.v);
  const double k0 = cfg.form().eval(s0.q, s0.q);
  for (std::size_t i = 0; i < r.base.size(); ++i) {
    const auto& bs = r.bundle.samples[i];
    const auto& ms = r.base.samples[i];
    r.position_deviation = std::max(r.position_deviation, (bs.p.base - ms.x).norm());
    r.velocity_deviation = std::max(r.velocity_deviation, (bs.w.base - ms.v).norm());
    const LieAlgebraElement omega = connection_form(cfg, bs.p, bs.w);
    r.bundle_charge_drift = std::max(r.bundle_charge_drift, (omega - q_bundle).norm());
    const double hi = kk_metric(cfg, m, bs.p, bs.w, bs.w);
    r.bundle_norm_drift = std::max(r.bundle_norm_drift, std::abs(hi - h0));
    const double gb = m.dot(bs.p.base, bs.w.base, bs.w.base);
    r.norm_split_defect = std::max(r.norm_split_defect, std::abs(gb - (hi - kqq)));
    r.base_norm_drift = std::max(r.base_norm_drift, std::abs(m.dot(ms.x, ms.v, ms.v) - g0));
    r.base_charge_norm_drift =
        std::max(r.base_charge_norm_drift, std::abs(cfg.form().eval(ms.q, ms.q) - k0));
    const AlgebraCoeffs framed = adjoint(bs.p.fiber, q_bundle).coeffs();
    r.gauge_charge_mismatch = std::max(r.gauge_charge_mismatch, (ms.q - framed).norm());
  }
  return r;
}

}  // namespace kkz
