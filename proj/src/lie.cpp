#include "kkz/lie.hpp"

#include <cmath>
#include <string>

#include "kkz/error.hpp"

namespace kkz {

namespace {

constexpr cplx kI{0.0, 1.0};

GroupMatrix generator(GroupId group, int a) {
  if (group == GroupId::U1) {
    GroupMatrix m(1, 1);
    m(0, 0) = kI;
    return m;
  }
  GroupMatrix m(2, 2);
  // -(i/2) sigma_a
  switch (a) {
    case 0:
      m << 0.0, -0.5 * kI, -0.5 * kI, 0.0;
      break;
    case 1:
      m << 0.0, -0.5, 0.5, 0.0;
      break;
    default:
      m << -0.5 * kI, 0.0, 0.0, 0.5 * kI;
      break;
  }
  return m;
}

// Re tr(T_a T_a), identical for every basis element.
double basis_trace(GroupId group) { return group == GroupId::U1 ? -1.0 : -0.5; }

void require_same(GroupId a, GroupId b, const char* op) {
  if (a != b) fail(ErrorKind::InvalidInput, std::string(op) + ": mismatched groups");
}

}  // namespace

int algebra_dim(GroupId group) noexcept { return group == GroupId::U1 ? 1 : 3; }
int rep_dim(GroupId group) noexcept { return group == GroupId::U1 ? 1 : 2; }

std::string_view to_string(GroupId group) noexcept {
  return group == GroupId::U1 ? "u1" : "su2";
}

GroupId parse_group(std::string_view name) {
  if (name == "u1" || name == "U1") return GroupId::U1;
  if (name == "su2" || name == "SU2") return GroupId::SU2;
  fail(ErrorKind::InvalidInput, "unknown group '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

LieAlgebraElement::LieAlgebraElement(GroupId group, AlgebraCoeffs coeffs)
    : group_(group), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != algebra_dim(group_))
    fail(ErrorKind::InvalidInput, "algebra element: dimension " +
                                      std::to_string(coeffs_.size()) +
                                      " does not match group " +
                                      std::string(to_string(group_)));
  if (!coeffs_.allFinite())
    fail(ErrorKind::InvalidInput, "algebra element: non-finite coefficient");
}

LieAlgebraElement LieAlgebraElement::zero(GroupId group) {
  return {group, AlgebraCoeffs::Zero(algebra_dim(group))};
}

LieAlgebraElement LieAlgebraElement::basis(GroupId group, int index) {
  if (index < 0 || index >= algebra_dim(group))
    fail(ErrorKind::InvalidInput, "basis index out of range");
  AlgebraCoeffs c = AlgebraCoeffs::Zero(algebra_dim(group));
  c[index] = 1.0;
  return {group, c};
}

LieAlgebraElement LieAlgebraElement::from_matrix(GroupId group,
                                                 const GroupMatrix& m) {
  const int n = rep_dim(group);
  if (m.rows() != n || m.cols() != n)
    fail(ErrorKind::InvalidInput, "algebra element: wrong matrix size");
  const GroupMatrix anti = 0.5 * (m - m.adjoint());
  AlgebraCoeffs c(algebra_dim(group));
  for (int a = 0; a < c.size(); ++a)
    c[a] = (anti * generator(group, a)).trace().real() / basis_trace(group);
  return {group, c};
}

GroupMatrix LieAlgebraElement::matrix() const {
  const int n = rep_dim(group_);
  GroupMatrix m = GroupMatrix::Zero(n, n);
  for (int a = 0; a < dim(); ++a) m += coeffs_[a] * generator(group_, a);
  return m;
}

LieAlgebraElement LieAlgebraElement::operator+(const LieAlgebraElement& o) const {
  require_same(group_, o.group_, "add");
  return {group_, coeffs_ + o.coeffs_};
}

LieAlgebraElement LieAlgebraElement::operator-(const LieAlgebraElement& o) const {
  require_same(group_, o.group_, "subtract");
  return {group_, coeffs_ - o.coeffs_};
}

// ---------------------------------------------------------------------------

GroupElement::GroupElement(GroupId group, GroupMatrix m)
    : group_(group), m_(std::move(m)) {
  const int n = rep_dim(group_);
  if (m_.rows() != n || m_.cols() != n)
    fail(ErrorKind::InvalidInput, "group element: wrong matrix size");
  if (!m_.allFinite())
    fail(ErrorKind::InvalidInput, "group element: non-finite entry");
  if (unitarity_defect() > 1e-10)
    fail(ErrorKind::InvalidInput, "group element: matrix is not unitary");
  if (group_ == GroupId::SU2 && std::abs(m_.determinant() - 1.0) > 1e-10)
    fail(ErrorKind::InvalidInput, "group element: determinant is not 1");
}

GroupElement GroupElement::identity(GroupId group) {
  const int n = rep_dim(group);
  return {group, GroupMatrix::Identity(n, n), Unchecked{}};
}

GroupElement GroupElement::project(GroupId group, const GroupMatrix& m) {
  if (!m.allFinite())
    fail(ErrorKind::InvalidInput, "group projection: non-finite entry");
  if (group == GroupId::U1) {
    const double r = std::abs(m(0, 0));
    if (r == 0.0) fail(ErrorKind::InvalidInput, "group projection: zero matrix");
    GroupMatrix u(1, 1);
    u(0, 0) = m(0, 0) / r;
    return {group, u, Unchecked{}};
  }
  // SU(2) = {[[a, -conj(b)], [b, conj(a)]] : |a|^2 + |b|^2 = 1}.
  cplx a = 0.5 * (m(0, 0) + std::conj(m(1, 1)));
  cplx b = 0.5 * (m(1, 0) - std::conj(m(0, 1)));
  const double r = std::sqrt(std::norm(a) + std::norm(b));
  if (r == 0.0) fail(ErrorKind::InvalidInput, "group projection: degenerate matrix");
  a /= r;
  b /= r;
  GroupMatrix u(2, 2);
  u << a, -std::conj(b), b, std::conj(a);
  return {group, u, Unchecked{}};
}

GroupElement GroupElement::inverse() const {
  return {group_, m_.adjoint(), Unchecked{}};
}

GroupElement GroupElement::operator*(const GroupElement& o) const {
  require_same(group_, o.group_, "group product");
  return {group_, m_ * o.m_, Unchecked{}};
}

double GroupElement::unitarity_defect() const {
  const int n = rep_dim(group_);
  return (m_.adjoint() * m_ - GroupMatrix::Identity(n, n)).norm();
}

GroupElement GroupElement::reunitarized(double threshold) const {
  if (unitarity_defect() <= threshold) return *this;
  return project(group_, m_);
}

// ---------------------------------------------------------------------------

BiInvariantForm::BiInvariantForm(GroupId group, double c)
    : group_(group), c_(c), scale_(-c * basis_trace(group)) {
  if (!(c > 0.0) || !std::isfinite(c))
    fail(ErrorKind::InvalidInput, "bi-invariant form: normalization must be positive");
}

BiInvariantForm BiInvariantForm::canonical(GroupId group) {
  return {group, -1.0 / basis_trace(group)};
}

double BiInvariantForm::operator()(const LieAlgebraElement& x,
                                   const LieAlgebraElement& y) const {
  require_same(x.group(), y.group(), "form_k");
  require_same(x.group(), group_, "form_k");
  return eval(x.coeffs(), y.coeffs());
}

// ---------------------------------------------------------------------------

LieAlgebraElement bracket(const LieAlgebraElement& x, const LieAlgebraElement& y) {
  require_same(x.group(), y.group(), "bracket");
  if (x.group() == GroupId::U1) return LieAlgebraElement::zero(GroupId::U1);
  // Structure constants epsilon_abc.
  const Eigen::Vector3d a = x.coeffs();
  const Eigen::Vector3d b = y.coeffs();
  return {GroupId::SU2, AlgebraCoeffs(a.cross(b))};
}

double form_k(const LieAlgebraElement& x, const LieAlgebraElement& y) {
  return BiInvariantForm::canonical(x.group())(x, y);
}

GroupElement exp_map(const LieAlgebraElement& x) {
  if (x.group() == GroupId::U1) {
    GroupMatrix m(1, 1);
    m(0, 0) = std::exp(kI * x[0]);
    return GroupElement::project(GroupId::U1, m);
  }
  const Eigen::Vector3d th = x.coeffs();
  const double phi = th.norm();
  const double c = std::cos(0.5 * phi);
  // sin(phi/2)/phi, with its series near zero.
  const double s = phi < 1e-8 ? 0.5 - phi * phi / 48.0 : std::sin(0.5 * phi) / phi;
  // exp(-(i/2) theta.sigma) = cos(phi/2) I - i sin(phi/2) n.sigma
  GroupMatrix m(2, 2);
  m << cplx(c, -s * th[2]), cplx(-s * th[1], -s * th[0]),
      cplx(s * th[1], -s * th[0]), cplx(c, s * th[2]);
  return GroupElement::project(GroupId::SU2, m);
}

LieAlgebraElement log_map(const GroupElement& g) {
  const GroupMatrix& m = g.matrix();
  if (g.group() == GroupId::U1) {
    const double phi = std::arg(m(0, 0));
    if (M_PI - std::abs(phi) <= 1e-12)
      fail(ErrorKind::ChartDomain, "log_map: U(1) element at the cut locus");
    AlgebraCoeffs c(1);
    c[0] = phi;
    return {GroupId::U1, c};
  }
  const double half_cos = 0.5 * m.trace().real();
  if (half_cos <= 1e-12)
    fail(ErrorKind::ChartDomain, "log_map: SU(2) rotation angle at or beyond pi");
  const AlgebraCoeffs u = LieAlgebraElement::from_matrix(GroupId::SU2, m).coeffs();
  // u = 2 sin(phi/2) n
  const double half_sin = 0.5 * u.norm();
  const double half_phi = std::atan2(half_sin, half_cos);
  const double factor = half_sin < 1e-12 ? 1.0 : half_phi / half_sin;
  return {GroupId::SU2, AlgebraCoeffs(factor * u)};
}

LieAlgebraElement adjoint(const GroupElement& g, const LieAlgebraElement& x) {
  require_same(g.group(), x.group(), "adjoint");
  if (g.group() == GroupId::U1) return x;
  const GroupMatrix conj = g.matrix() * x.matrix() * g.matrix().adjoint();
  return LieAlgebraElement::from_matrix(g.group(), conj);
}

AlgebraMatrix ad_matrix(const LieAlgebraElement& x) {
  if (x.group() == GroupId::U1) return AlgebraMatrix::Zero(1, 1);
  AlgebraMatrix s(3, 3);
  s << 0.0, -x[2], x[1], x[2], 0.0, -x[0], -x[1], x[0], 0.0;
  return s;
}

AlgebraMatrix adjoint_matrix(const GroupElement& g) {
  const int d = algebra_dim(g.group());
  if (g.group() == GroupId::U1) return AlgebraMatrix::Identity(1, 1);
  AlgebraMatrix r(d, d);
  for (int b = 0; b < d; ++b)
    r.col(b) = adjoint(g, LieAlgebraElement::basis(g.group(), b)).coeffs();
  return r;
}

AlgebraMatrix dexp_matrix(GroupId group, const AlgebraCoeffs& theta) {
  if (group == GroupId::U1) return AlgebraMatrix::Identity(1, 1);
  const double phi = theta.norm();
  const double phi2 = phi * phi;
  double a;  // (1 - cos phi) / phi^2
  double b;  // (phi - sin phi) / phi^3
  if (phi < 1e-4) {
    a = 0.5 - phi2 / 24.0;
    b = 1.0 / 6.0 - phi2 / 120.0;
  } else {
    a = (1.0 - std::cos(phi)) / phi2;
    b = (phi - std::sin(phi)) / (phi2 * phi);
  }
  const AlgebraMatrix s = ad_matrix(LieAlgebraElement(group, theta));
  return AlgebraMatrix::Identity(3, 3) - a * s + b * s * s;
}

}  // namespace kkz
