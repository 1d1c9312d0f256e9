#include "kkz/zeeman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "kkz/error.hpp"
#include "kkz/finite_difference.hpp"
#include "kkz/kk_bundle.hpp"

namespace kkz {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> parameters(const Trajectory& t) {
  std::vector<double> s;
  s.reserve(t.size());
  for (const auto& smp : t.samples) s.push_back(smp.s);
  return s;
}

// Uniform double in [-1, 1) from the raw 64-bit engine output, so the
// sequence does not depend on the standard library's distributions.
double unit_symmetric(std::mt19937_64& rng) {
  return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Gauge-frame transport h' = -(A.v) h along the sampled curve, so that
// q(s_i) = Ad_{h_i} Q.
std::vector<GroupElement> transport(const GaugeFieldConfig& cfg, const Trajectory& seg) {
  std::vector<GroupElement> out;
  out.reserve(seg.size());
  if (cfg.group() == GroupId::U1) {
    out.assign(seg.size(), GroupElement::identity(GroupId::U1));
    return out;
  }
  const auto lift = geodesic_lift(cfg, seg, LieAlgebraElement::zero(cfg.group()),
                                  GroupElement::identity(cfg.group()));
  for (const auto& smp : lift.samples) out.push_back(smp.p.fiber);
  return out;
}

// Stacked pointwise system b_i = M_i Q over interior samples, with
// b_i = a_i + Gamma(v_i, v_i) and column c of M_i = F(Ad_{h_i} e_c) v_i.
struct LinearSystem {
  Eigen::MatrixXd m;
  Eigen::VectorXd b;
  double mean_speed2 = 0.0;
};

LinearSystem pointwise_system(const GaugeFieldConfig& cfg, const BaseMetric& metric,
                              const Trajectory& seg, double fd_scale) {
  const std::size_t n = seg.size();
  const double h = fd::uniform_step(parameters(seg));
  std::vector<FourVector> v;
  v.reserve(n);
  for (const auto& smp : seg.samples) v.push_back(smp.v);
  const auto frames = transport(cfg, seg);

  const int d = cfg.dim();
  const std::size_t rows = n - 4;
  LinearSystem sys{Eigen::MatrixXd::Zero(4 * rows, d), Eigen::VectorXd::Zero(4 * rows), 0.0};
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const auto& smp = seg.samples[i];
    Vec4 rhs = fd::derivative(v, i, h);
    if (!metric.is_minkowski()) rhs += contract(christoffel(metric, smp.x, fd_scale), smp.v);
    const std::size_t r = 4 * (i - 2);
    sys.b.segment<4>(r) = rhs;
    for (int c = 0; c < d; ++c) {
      const auto q = adjoint(frames[i], LieAlgebraElement::basis(cfg.group(), c));
      sys.m.block(r, c, 4, 1) = force_matrix(cfg, metric, q, smp.x) * smp.v;
    }
    sys.mean_speed2 += smp.v.squaredNorm();
  }
  sys.mean_speed2 /= static_cast<double>(rows);
  return sys;
}

double normalized_defect(const LinearSystem& sys, const AlgebraCoeffs& q) {
  const Eigen::VectorXd r = sys.b - sys.m * q;
  const double rows = static_cast<double>(r.size() / 4);
  const double rms = std::sqrt(r.squaredNorm() / rows);
  const double value = rms / std::max(sys.mean_speed2, 1e-300);
  return std::isfinite(value) ? value : kInf;
}

void check_segment(const Trajectory& seg, std::size_t min_samples) {
  if (seg.size() < std::max<std::size_t>(min_samples, 5))
    fail(ErrorKind::InvalidInput, "segment has " + std::to_string(seg.size()) +
                                      " samples, need " + std::to_string(min_samples));
  for (const auto& smp : seg.samples)
    if (!std::isfinite(smp.s) || !smp.x.allFinite() || (seg.has_velocity && !smp.v.allFinite()))
      fail(ErrorKind::InvalidInput, "segment contains non-finite samples");
  fd::uniform_step(parameters(seg));
}

// Levenberg-Marquardt on the stacked position mismatch of a Wong
// integration started from the first sample with q(0) = Q.
struct ShootingResult {
  Eigen::VectorXd q;
  double cost = kInf;
  double sup_mismatch = kInf;
  bool converged = false;
};

class Shooter {
 public:
  Shooter(const GaugeFieldConfig& cfg, const BaseMetric& m, const Trajectory& seg,
          const ClassifierOptions& opt, double bound)
      : cfg_(cfg), m_(m), seg_(seg), opt_(opt), bound_(bound), grid_(parameters(seg)) {}

  std::optional<Eigen::VectorXd> mismatch(const Eigen::VectorXd& q) const {
    if (!(q.norm() <= bound_)) return std::nullopt;
    const auto& first = seg_.samples.front();
    try {
      const auto t = integrate_charged_motion_on(
          cfg_, m_, {first.x, first.v, {cfg_.group(), q}}, grid_,
          {.tol = opt_.shooting_tol, .fd_scale = opt_.fd_scale,
           .timelike_margin = opt_.timelike_margin, .max_steps = opt_.shooting_max_steps});
      Eigen::VectorXd r(4 * seg_.size());
      for (std::size_t i = 0; i < seg_.size(); ++i)
        r.segment<4>(4 * i) = t.samples[i].x - seg_.samples[i].x;
      return r;
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  ShootingResult run(Eigen::VectorXd q) const {
    ShootingResult out;
    auto r = mismatch(q);
    if (!r) return out;
    double cost = r->squaredNorm();
    double lambda = 1e-3;
    const int d = static_cast<int>(q.size());
    for (int it = 0; it < opt_.max_iterations; ++it) {
      Eigen::MatrixXd jac(r->size(), d);
      bool ok = true;
      for (int c = 0; c < d && ok; ++c) {
        const double step = 1e-6 * std::max(1.0, q.norm());
        Eigen::VectorXd qc = q;
        qc[c] += step;
        const auto rc = mismatch(qc);
        if (!rc) {
          ok = false;
          break;
        }
        jac.col(c) = (*rc - *r) / step;
      }
      if (!ok) break;
      const Eigen::MatrixXd jtj = jac.transpose() * jac;
      const Eigen::VectorXd g = jac.transpose() * *r;
      bool improved = false;
      while (lambda < 1e12) {
        Eigen::MatrixXd a = jtj;
        a.diagonal() += lambda * jtj.diagonal() + Eigen::VectorXd::Constant(d, 1e-14 * lambda);
        const Eigen::VectorXd delta = -a.ldlt().solve(g);
        const Eigen::VectorXd qn = q + delta;
        const auto rn = mismatch(qn);
        if (rn && rn->squaredNorm() < cost) {
          const double reduction = cost - rn->squaredNorm();
          q = qn;
          r = rn;
          cost = rn->squaredNorm();
          lambda = std::max(lambda / 10.0, 1e-12);
          improved = true;
          if (delta.norm() <= 1e-10 * (1.0 + q.norm()) || reduction <= 1e-14 * cost + 1e-300)
            out.converged = true;
          break;
        }
        lambda *= 10.0;
      }
      // No descent direction left: a minimum within integration noise.
      if (!improved) out.converged = true;
      if (out.converged) break;
    }
    out.q = q;
    out.cost = cost;
    out.sup_mismatch = r->cwiseAbs().maxCoeff();
    return out;
  }

 private:
  const GaugeFieldConfig& cfg_;
  const BaseMetric& m_;
  const Trajectory& seg_;
  const ClassifierOptions& opt_;
  double bound_;
  std::vector<double> grid_;
};

}  // namespace

Trajectory with_fd_velocities(const Trajectory& segment) {
  if (segment.has_velocity) return segment;
  const double h = fd::uniform_step(parameters(segment));
  std::vector<BaseEvent> x;
  x.reserve(segment.size());
  for (const auto& smp : segment.samples) x.push_back(smp.x);
  Trajectory out = segment;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i].v = fd::derivative(x, i, h);
  out.has_velocity = true;
  return out;
}

double min_timelike_margin(const BaseMetric& m, const Trajectory& segment) {
  double margin = kInf;
  for (const auto& smp : segment.samples) margin = std::min(margin, m.dot(smp.x, smp.v, smp.v));
  return margin;
}

double dynamics_residual(const GaugeFieldConfig& cfg, const BaseMetric& m,
                         const Trajectory& segment, const LieAlgebraElement& charge,
                         double fd_scale) {
  const Trajectory seg = with_fd_velocities(segment);
  check_segment(seg, 5);
  return normalized_defect(pointwise_system(cfg, m, seg, fd_scale), charge.coeffs());
}

ChargeFit fit_charge(const GaugeFieldConfig& cfg, const BaseMetric& m, const Trajectory& segment,
                     const ClassifierOptions& options, std::size_t segment_index) {
  check_segment(segment, options.min_samples);
  const Trajectory seg = with_fd_velocities(segment);
  const double margin = min_timelike_margin(m, seg);
  if (!(margin > options.timelike_margin))
    fail(ErrorKind::Classification, "segment is not timelike (min g(v,v) = " +
                                        std::to_string(margin) + ")");

  const LinearSystem sys = pointwise_system(cfg, m, seg, options.fd_scale);
  const Eigen::VectorXd linear = sys.m.completeOrthogonalDecomposition().solve(sys.b);
  ChargeFit fit{{cfg.group(), linear}, normalized_defect(sys, linear), std::nullopt, 1, true};
  if (!linear.allFinite()) {
    fit.charge = LieAlgebraElement::zero(cfg.group());
    fit.residual = kInf;
    fit.converged = false;
    return fit;
  }
  if (cfg.group() == GroupId::U1) return fit;

  std::vector<Eigen::VectorXd> starts{linear, Eigen::VectorXd::Zero(cfg.dim())};
  std::mt19937_64 rng(mix(options.seed, segment_index));
  const double spread = std::clamp(linear.norm(), 1.0, options.charge_bound / std::sqrt(3.0));
  for (int k = 0; k < options.random_starts; ++k) {
    Eigen::VectorXd q(cfg.dim());
    for (int c = 0; c < q.size(); ++c) q[c] = spread * unit_symmetric(rng);
    starts.push_back(q);
  }

  const Shooter shooter(cfg, m, seg, options, options.charge_bound);
  ShootingResult best;
  fit.starts_tried = 0;
  for (const auto& q0 : starts) {
    ++fit.starts_tried;
    const ShootingResult res = shooter.run(q0);
    if (res.converged && (!best.converged || res.cost < best.cost)) best = res;
    // Further starts only matter while the segment is still unexplained.
    if (best.converged && normalized_defect(sys, best.q) <= options.residual_threshold) break;
  }
  if (!best.converged) {
    fit.residual = kInf;
    fit.converged = false;
    return fit;
  }
  fit.charge = {cfg.group(), best.q};
  fit.residual = normalized_defect(sys, best.q);
  fit.trajectory_mismatch = best.sup_mismatch;
  return fit;
}

std::string to_string(CurveVerdict v) {
  switch (v) {
    case CurveVerdict::ZGContinuous:
      return "ZG-continuous";
    case CurveVerdict::GoebelContinuous:
      return "Goebel-continuous";
    case CurveVerdict::Discontinuous:
      return "discontinuous";
  }
  return "unknown";
}

void validate_curve(const PolygonalCurve& curve, const ClassifierOptions& options) {
  if (curve.segments.empty()) fail(ErrorKind::InvalidInput, "curve has no segments");
  for (std::size_t k = 0; k < curve.segments.size(); ++k) {
    try {
      check_segment(curve.segments[k], options.min_samples);
    } catch (const Error& e) {
      fail(ErrorKind::InvalidInput, "segment " + std::to_string(k) + ": " + e.what());
    }
    if (k > 0) {
      const auto& a = curve.segments[k - 1].samples.back();
      const auto& b = curve.segments[k].samples.front();
      if ((a.x - b.x).norm() > options.joint_tol)
        fail(ErrorKind::InvalidInput,
             "segments " + std::to_string(k - 1) + " and " + std::to_string(k) + " do not meet");
    }
  }
}

ClassificationReport classify(const GaugeFieldConfig& cfg, const BaseMetric& m,
                              const PolygonalCurve& curve, const ClassifierOptions& options) {
  validate_curve(curve, options);
  ClassificationReport report;
  report.tolerances = options;
  std::vector<std::optional<AlgebraCoeffs>> end_charge;
  for (std::size_t k = 0; k < curve.segments.size(); ++k) {
    const Trajectory seg = with_fd_velocities(curve.segments[k]);
    SegmentReport sr;
    sr.samples = seg.size();
    sr.min_margin = min_timelike_margin(m, seg);
    sr.timelike = sr.min_margin > options.timelike_margin;
    std::optional<AlgebraCoeffs> q_end;
    if (!sr.timelike) {
      sr.reason = "not timelike";
    } else {
      try {
        sr.fit = fit_charge(cfg, m, seg, options, k);
        sr.accepted = sr.fit->residual <= options.residual_threshold;
        if (!sr.fit->converged)
          sr.reason = "charge fit did not converge";
        else if (!sr.accepted)
          sr.reason = "dynamics residual above threshold";
        const auto frames = transport(cfg, seg);
        q_end = adjoint(frames.back(), sr.fit->charge).coeffs();
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidInput) throw;
        sr.reason = e.what();
      }
    }
    if (k > 0) {
      const auto& prev = end_charge.back();
      report.charge_jumps.push_back(prev && sr.fit ? (sr.fit->charge.coeffs() - *prev).norm()
                                                   : kInf);
    }
    end_charge.push_back(q_end);
    report.segments.push_back(std::move(sr));
  }

  const bool all = std::all_of(report.segments.begin(), report.segments.end(),
                               [](const SegmentReport& s) { return s.accepted; });
  const bool chargeless =
      all && std::all_of(report.segments.begin(), report.segments.end(), [&](const SegmentReport& s) {
        return s.fit->charge.norm() <= options.q_zero_tol;
      });
  report.verdict = !all         ? CurveVerdict::Discontinuous
                   : chargeless ? CurveVerdict::GoebelContinuous
                                : CurveVerdict::ZGContinuous;
  return report;
}

EquivalenceReport equivalence_check(const GaugeFieldConfig& cfg, const BaseMetric& m,
                                    const PolygonalCurve& curve, const ClassifierOptions& options) {
  EquivalenceReport out;
  out.classification = classify(cfg, m, curve, options);
  out.verdict_a = out.classification.verdict != CurveVerdict::Discontinuous;
  out.verdict_b = true;
  for (std::size_t k = 0; k < curve.segments.size(); ++k) {
    const auto& sr = out.classification.segments[k];
    double residual = kInf;
    if (sr.timelike && sr.fit) {
      try {
        const auto lift = geodesic_lift(cfg, with_fd_velocities(curve.segments[k]),
                                        sr.fit->charge, GroupElement::identity(cfg.group()));
        residual = bundle_geodesic_residual(cfg, m, lift, options.fd_scale).normalized;
        if (!std::isfinite(residual)) residual = kInf;
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidInput) throw;
      }
    }
    out.lift_residuals.push_back(residual);
    out.verdict_b = out.verdict_b && residual <= options.residual_threshold;
  }
  out.agree = out.verdict_a == out.verdict_b;
  return out;
}

PolygonalCurve split_polygonal(const Trajectory& flat, const BreakpointOptions& options) {
  PolygonalCurve curve;
  const std::size_t n = flat.size();
  if (n == 0) fail(ErrorKind::InvalidInput, "empty curve");

  auto piece = [&](std::size_t begin, std::size_t end) {
    Trajectory t;
    t.has_velocity = flat.has_velocity;
    t.samples.assign(flat.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     flat.samples.begin() + static_cast<std::ptrdiff_t>(end));
    return t;
  };

  std::vector<std::size_t> repeats;
  for (std::size_t i = 1; i < n; ++i) {
    if (flat.samples[i].s == flat.samples[i - 1].s) repeats.push_back(i);
    else if (flat.samples[i].s < flat.samples[i - 1].s)
      fail(ErrorKind::InvalidInput, "curve parameter decreases at row " + std::to_string(i));
  }
  if (!repeats.empty()) {
    std::size_t begin = 0;
    for (std::size_t r : repeats) {
      curve.segments.push_back(piece(begin, r));
      curve.breakpoints.push_back(r);
      begin = r;
    }
    curve.segments.push_back(piece(begin, n));
    return curve;
  }
  if (!options.detect || n < 2 * options.window + 3) {
    curve.segments.push_back(piece(0, n));
    return curve;
  }

  std::vector<double> d2(n, 0.0);
  double scale = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    d2[i] = (flat.samples[i + 1].x - 2.0 * flat.samples[i].x + flat.samples[i - 1].x).norm();
    scale = std::max(scale, flat.samples[i].x.cwiseAbs().maxCoeff());
  }
  const double floor = 1e-10 * (1.0 + scale);
  std::vector<bool> flagged(n, false);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const std::size_t lo = std::max<std::size_t>(1, i > options.window ? i - options.window : 1);
    const std::size_t hi = std::min(n - 2, i + options.window);
    std::vector<double> local(d2.begin() + static_cast<std::ptrdiff_t>(lo),
                              d2.begin() + static_cast<std::ptrdiff_t>(hi + 1));
    std::nth_element(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(local.size() / 2),
                     local.end());
    const double median = local[local.size() / 2];
    flagged[i] = d2[i] > options.jump_factor * median + floor;
  }

  std::vector<std::size_t> vertices;
  for (std::size_t i = 1; i + 1 < n;) {
    if (!flagged[i]) {
      ++i;
      continue;
    }
    std::size_t best = i;
    for (; i + 1 < n && flagged[i]; ++i)
      if (d2[i] > d2[best]) best = i;
    vertices.push_back(best);
  }

  std::size_t begin = 0;
  for (std::size_t vtx : vertices) {
    curve.segments.push_back(piece(begin, vtx + 1));
    curve.breakpoints.push_back(vtx);
    begin = vtx;
  }
  curve.segments.push_back(piece(begin, n));

  if (flat.has_velocity) {
    // A vertex row carries a single velocity; re-derive both sides from
    // positions with one-sided stencils.
    for (std::size_t k = 0; k + 1 < curve.segments.size(); ++k) {
      auto& left = curve.segments[k].samples;
      auto& right = curve.segments[k + 1].samples;
      if (left.size() >= 5) {
        const Trajectory tail{{left.end() - 5, left.end()}, false, {}};
        left.back().v = with_fd_velocities(tail).samples.back().v;
      }
      if (right.size() >= 5) {
        const Trajectory head{{right.begin(), right.begin() + 5}, false, {}};
        right.front().v = with_fd_velocities(head).samples.front().v;
      }
    }
  }
  return curve;
}

Mat4 lorentz_boost(int axis, double rapidity) {
  if (axis < 1 || axis > 3) fail(ErrorKind::InvalidInput, "boost axis must be 1, 2 or 3");
  Mat4 l = Mat4::Identity();
  l(0, 0) = l(axis, axis) = std::cosh(rapidity);
  l(0, axis) = l(axis, 0) = std::sinh(rapidity);
  return l;
}

Mat4 spatial_rotation(int i, int j, double angle) {
  if (i < 1 || i > 3 || j < 1 || j > 3 || i == j)
    fail(ErrorKind::InvalidInput, "rotation plane must be two distinct spatial axes");
  Mat4 r = Mat4::Identity();
  r(i, i) = r(j, j) = std::cos(angle);
  r(i, j) = -std::sin(angle);
  r(j, i) = std::sin(angle);
  return r;
}

namespace {

void check_transform(const PoincareDilatation& p) {
  const Mat4 eta = Eigen::Vector4d(1, -1, -1, -1).asDiagonal();
  if ((p.lorentz.transpose() * eta * p.lorentz - eta).norm() > 1e-12 ||
      !(p.scale > 0.0) || !p.shift.allFinite())
    fail(ErrorKind::InvalidInput, "transform must be a Lorentz map with positive dilatation");
}

}  // namespace

Trajectory transform(const Trajectory& t, const PoincareDilatation& p) {
  check_transform(p);
  Trajectory out = t;
  for (auto& smp : out.samples) {
    smp.s *= p.scale;
    smp.x = p.scale * (p.lorentz * smp.x) + p.shift;
    smp.v = p.lorentz * smp.v;
  }
  return out;
}

PolygonalCurve transform(const PolygonalCurve& c, const PoincareDilatation& p) {
  PolygonalCurve out = c;
  for (auto& seg : out.segments) seg = transform(seg, p);
  return out;
}

GaugeFieldConfig transform(const GaugeFieldConfig& cfg, const PoincareDilatation& p) {
  check_transform(p);
  const Mat4 inv = p.lorentz.inverse();
  const Mat4 inv_t = inv.transpose();
  auto back = [=](const BaseEvent& xp) -> BaseEvent { return inv * (xp - p.shift) / p.scale; };
  auto potential = [=](const BaseEvent& xp) {
    const Potential a = cfg.potential(back(xp));
    Potential out;
    for (int mu = 0; mu < 4; ++mu) {
      out[mu] = AlgebraCoeffs::Zero(cfg.dim());
      for (int nu = 0; nu < 4; ++nu) out[mu] += inv_t(mu, nu) * a[nu];
    }
    return out;
  };
  GaugeFieldConfig::CurvatureFn curvature_fn;
  if (cfg.has_analytic_curvature()) {
    curvature_fn = [=](const BaseEvent& xp) {
      const CurvatureValue f = cfg.analytic_curvature(back(xp));
      CurvatureValue out(cfg.group());
      for (int mu = 0; mu < 4; ++mu)
        for (int nu = mu + 1; nu < 4; ++nu) {
          AlgebraCoeffs sum = AlgebraCoeffs::Zero(cfg.dim());
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
              if (a != b) sum += inv_t(mu, a) * f(a, b) * inv(b, nu);
          out.set(mu, nu, sum / p.scale);
        }
      return out;
    };
  }
  auto domain = [=](const BaseEvent& xp) { return cfg.in_domain(back(xp)); };
  return GaugeFieldConfig(cfg.group(), cfg.name(), potential, curvature_fn, domain, cfg.params())
      .with_form(cfg.form());
}

}  // namespace kkz
