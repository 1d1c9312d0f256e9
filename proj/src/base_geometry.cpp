#include "kkz/base_geometry.hpp"

#include <cmath>

#include "kkz/error.hpp"
#include "kkz/finite_difference.hpp"

namespace kkz {

BaseMetric BaseMetric::minkowski() { return {"minkowski", {}, {}}; }

BaseMetric BaseMetric::diagonal(std::string name, DiagonalFn diag, DomainFn domain) {
  if (!diag) fail(ErrorKind::InvalidInput, "diagonal metric needs an evaluator");
  return {std::move(name), std::move(diag), std::move(domain)};
}

BaseMetric BaseMetric::exp_lapse(double a) {
  return diagonal("exp-lapse", [a](const BaseEvent& x) {
    return Vec4(std::exp(2.0 * a * x[1]), -1.0, -1.0, -1.0);
  });
}

BaseMetric BaseMetric::linear_lapse(double a) {
  return diagonal(
      "linear-lapse",
      [a](const BaseEvent& x) { return Vec4(1.0 + a * x[1], -1.0, -1.0, -1.0); },
      [a](const BaseEvent& x) { return 1.0 + a * x[1] > 0.0; });
}

bool BaseMetric::in_domain(const BaseEvent& x) const {
  if (!x.allFinite()) return false;
  return !domain_ || domain_(x);
}

Mat4 BaseMetric::components(const BaseEvent& x) const {
  if (!in_domain(x))
    fail(ErrorKind::ChartDomain, "base metric '" + name_ + "': point outside chart domain");
  if (!diag_) return Vec4(1.0, -1.0, -1.0, -1.0).asDiagonal();
  const Vec4 d = diag_(x);
  int positive = 0;
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(d[i]) || d[i] == 0.0)
      fail(ErrorKind::Geometry, "base metric '" + name_ + "': degenerate component");
    if (d[i] > 0.0) ++positive;
  }
  if (positive != 1)
    fail(ErrorKind::Geometry, "base metric '" + name_ + "': not Lorentzian");
  return d.asDiagonal();
}

Mat4 BaseMetric::inverse(const BaseEvent& x) const {
  // Both supported kinds are diagonal.
  return components(x).diagonal().cwiseInverse().asDiagonal();
}

double BaseMetric::dot(const BaseEvent& x, const FourVector& u,
                       const FourVector& v) const {
  return u.dot(components(x) * v);
}

Christoffel christoffel(const BaseMetric& m, const BaseEvent& x, double fd_scale) {
  Christoffel gamma;
  for (auto& g : gamma) g.setZero();
  if (m.is_minkowski()) return gamma;

  // dg[l](i, j) = d_l g_ij
  std::array<Mat4, 4> dg;
  for (int l = 0; l < 4; ++l) {
    const double h = fd_step(x[l], fd_scale);
    BaseEvent xp = x, xm = x;
    xp[l] += h;
    xm[l] -= h;
    dg[l] = (m.components(xp) - m.components(xm)) / (2.0 * h);
  }
  const Mat4 ginv = m.inverse(x);
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu)
      for (int la = nu; la < 4; ++la) {
        double sum = 0.0;
        for (int sg = 0; sg < 4; ++sg)
          sum += ginv(mu, sg) * (dg[nu](sg, la) + dg[la](sg, nu) - dg[sg](nu, la));
        gamma[mu](nu, la) = gamma[mu](la, nu) = 0.5 * sum;
      }
  return gamma;
}

Vec4 contract(const Christoffel& gamma, const FourVector& v) {
  Vec4 out;
  for (int mu = 0; mu < 4; ++mu) out[mu] = v.dot(gamma[mu] * v);
  return out;
}

GeodesicResidual geodesic_residual(const BaseMetric& m, const Trajectory& traj,
                                   double fd_scale) {
  if (traj.size() < 5)
    fail(ErrorKind::InvalidInput, "geodesic_residual: need at least 5 samples");
  if (!traj.has_velocity)
    fail(ErrorKind::InvalidInput, "geodesic_residual: trajectory has no velocities");
  std::vector<double> s;
  std::vector<Vec4> v;
  s.reserve(traj.size());
  v.reserve(traj.size());
  for (const auto& smp : traj.samples) {
    s.push_back(smp.s);
    v.push_back(smp.v);
  }
  const double h = fd::uniform_step(s);

  GeodesicResidual out;
  for (std::size_t i = 2; i + 2 < traj.size(); ++i) {
    const Vec4 a = fd::derivative(v, i, h);
    const Vec4 r = a + contract(christoffel(m, traj.samples[i].x, fd_scale), v[i]);
    out.index.push_back(i);
    out.residual.push_back(r.norm());
    out.max = std::max(out.max, r.norm());
  }
  return out;
}

CausalCharacter causal_character(const BaseMetric& m, const BaseEvent& x,
                                 const FourVector& v, double margin) {
  const double n = m.dot(x, v, v);
  if (n > margin) return {CausalKind::Timelike, n};
  if (n < -margin) return {CausalKind::Spacelike, n};
  return {CausalKind::Null, n};
}

const char* to_string(CausalKind kind) noexcept {
  switch (kind) {
    case CausalKind::Timelike:
      return "timelike";
    case CausalKind::Null:
      return "null";
    case CausalKind::Spacelike:
      return "spacelike";
  }
  return "unknown";
}

}  // namespace kkz
