#include "kkz/gauge_field.hpp"

#include <cmath>
#include <set>

#include "kkz/error.hpp"

namespace kkz {

CurvatureValue::CurvatureValue(GroupId group) : group_(group) {
  for (auto& c : upper_) c = AlgebraCoeffs::Zero(algebra_dim(group));
}

int CurvatureValue::slot(int mu, int nu) {
  // (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)
  static constexpr int table[4][4] = {
      {-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
  return table[mu][nu];
}

AlgebraCoeffs CurvatureValue::operator()(int mu, int nu) const {
  if (mu == nu) return AlgebraCoeffs::Zero(algebra_dim(group_));
  const AlgebraCoeffs& c = upper_[slot(mu, nu)];
  return mu < nu ? c : AlgebraCoeffs(-c);
}

void CurvatureValue::set(int mu, int nu, const AlgebraCoeffs& value) {
  if (mu == nu) fail(ErrorKind::InvalidInput, "curvature: diagonal component is zero");
  upper_[slot(mu, nu)] = mu < nu ? value : AlgebraCoeffs(-value);
}

double CurvatureValue::max_norm() const {
  double m = 0.0;
  for (const auto& c : upper_) m = std::max(m, c.norm());
  return m;
}

// ---------------------------------------------------------------------------

GaugeFieldConfig::GaugeFieldConfig(GroupId group, std::string name,
                                   PotentialFn potential, CurvatureFn curvature,
                                   DomainFn domain, ScenarioParams params)
    : group_(group),
      name_(std::move(name)),
      potential_(std::move(potential)),
      curvature_(std::move(curvature)),
      domain_(std::move(domain)),
      params_(std::move(params)),
      form_(BiInvariantForm::canonical(group)) {
  if (!potential_) fail(ErrorKind::InvalidInput, "gauge field needs a potential");
}

bool GaugeFieldConfig::in_domain(const BaseEvent& x) const {
  if (!x.allFinite()) return false;
  return !domain_ || domain_(x);
}

Potential GaugeFieldConfig::potential(const BaseEvent& x) const {
  if (!in_domain(x))
    fail(ErrorKind::ChartDomain, "gauge field '" + name_ + "': point outside domain");
  Potential a = potential_(x);
  for (const auto& c : a)
    if (c.size() != dim() || !c.allFinite())
      fail(ErrorKind::ChartDomain, "gauge field '" + name_ + "': invalid potential value");
  return a;
}

CurvatureValue GaugeFieldConfig::analytic_curvature(const BaseEvent& x) const {
  if (!curvature_)
    fail(ErrorKind::InvalidInput, "gauge field '" + name_ + "' has no analytic curvature");
  if (!in_domain(x))
    fail(ErrorKind::ChartDomain, "gauge field '" + name_ + "': point outside domain");
  return curvature_(x);
}

GaugeFieldConfig GaugeFieldConfig::with_form(const BiInvariantForm& form) const {
  if (form.group() != group_) fail(ErrorKind::InvalidInput, "with_form: group mismatch");
  GaugeFieldConfig out = *this;
  out.form_ = form;
  return out;
}

// ---------------------------------------------------------------------------

AlgebraCoeffs contract(const Potential& a, const FourVector& v) {
  AlgebraCoeffs out = v[0] * a[0];
  for (int mu = 1; mu < 4; ++mu) out += v[mu] * a[mu];
  return out;
}

namespace {

AlgebraCoeffs bracket_coeffs(GroupId group, const AlgebraCoeffs& x,
                             const AlgebraCoeffs& y) {
  return bracket(LieAlgebraElement(group, x), LieAlgebraElement(group, y)).coeffs();
}

}  // namespace

CurvatureValue curvature_fd(const GaugeFieldConfig& cfg, const BaseEvent& x,
                            double fd_scale) {
  std::array<Potential, 4> da;  // da[mu][nu] = d_mu A_nu
  for (int mu = 0; mu < 4; ++mu) {
    const double h = fd_step(x[mu], fd_scale);
    BaseEvent xp = x, xm = x;
    xp[mu] += h;
    xm[mu] -= h;
    const Potential ap = cfg.potential(xp);
    const Potential am = cfg.potential(xm);
    for (int nu = 0; nu < 4; ++nu) da[mu][nu] = (ap[nu] - am[nu]) / (2.0 * h);
  }
  const Potential a = cfg.potential(x);
  CurvatureValue f(cfg.group());
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = mu + 1; nu < 4; ++nu)
      f.set(mu, nu, da[mu][nu] - da[nu][mu] + bracket_coeffs(cfg.group(), a[mu], a[nu]));
  return f;
}

CurvatureValue curvature(const GaugeFieldConfig& cfg, const BaseEvent& x,
                         double fd_scale) {
  if (cfg.has_analytic_curvature()) return cfg.analytic_curvature(x);
  return curvature_fd(cfg, x, fd_scale);
}

GaugeFieldConfig gauge_transform(const GaugeFieldConfig& cfg, GaugeMap gmap,
                                 double fd_scale) {
  if (!gmap) fail(ErrorKind::InvalidInput, "gauge_transform: empty gauge map");
  const GroupId group = cfg.group();
  auto potential = [cfg, gmap, fd_scale, group](const BaseEvent& x) {
    const GroupElement g = gmap(x);
    if (g.group() != group) fail(ErrorKind::InvalidInput, "gauge_transform: group mismatch");
    const GroupElement ginv = g.inverse();
    const AlgebraMatrix ad_inv = adjoint_matrix(ginv);
    const Potential a = cfg.potential(x);
    Potential out;
    for (int mu = 0; mu < 4; ++mu) {
      const double h = fd_step(x[mu], fd_scale);
      BaseEvent xp = x, xm = x;
      xp[mu] += h;
      xm[mu] -= h;
      const GroupMatrix dg = (gmap(xp).matrix() - gmap(xm).matrix()) / (2.0 * h);
      const AlgebraCoeffs maurer_cartan =
          LieAlgebraElement::from_matrix(group, ginv.matrix() * dg).coeffs();
      out[mu] = ad_inv * a[mu] + maurer_cartan;
    }
    return out;
  };
  GaugeFieldConfig::CurvatureFn curv;
  if (cfg.has_analytic_curvature()) {
    curv = [cfg, gmap](const BaseEvent& x) {
      const AlgebraMatrix ad_inv = adjoint_matrix(gmap(x).inverse());
      const CurvatureValue f = cfg.analytic_curvature(x);
      CurvatureValue out(cfg.group());
      for (int mu = 0; mu < 4; ++mu)
        for (int nu = mu + 1; nu < 4; ++nu) out.set(mu, nu, ad_inv * f(mu, nu));
      return out;
    };
  }
  auto domain = [cfg](const BaseEvent& x) { return cfg.in_domain(x); };
  return GaugeFieldConfig(group, cfg.name() + "+gauge", std::move(potential),
                          std::move(curv), std::move(domain), cfg.params())
      .with_form(cfg.form());
}

double bianchi_residual(const GaugeFieldConfig& cfg, const BaseEvent& x,
                        double fd_scale) {
  const GroupId group = cfg.group();
  std::array<CurvatureValue, 4> df{CurvatureValue(group), CurvatureValue(group),
                                   CurvatureValue(group), CurvatureValue(group)};
  for (int mu = 0; mu < 4; ++mu) {
    const double h = fd_step(x[mu], fd_scale);
    BaseEvent xp = x, xm = x;
    xp[mu] += h;
    xm[mu] -= h;
    const CurvatureValue fp = curvature(cfg, xp, fd_scale);
    const CurvatureValue fm = curvature(cfg, xm, fd_scale);
    for (int nu = 0; nu < 4; ++nu)
      for (int la = nu + 1; la < 4; ++la)
        df[mu].set(nu, la, (fp(nu, la) - fm(nu, la)) / (2.0 * h));
  }
  const Potential a = cfg.potential(x);
  const CurvatureValue f = curvature(cfg, x, fd_scale);
  auto term = [&](int mu, int nu, int la) -> AlgebraCoeffs {
    return df[mu](nu, la) + bracket_coeffs(group, a[mu], f(nu, la));
  };
  double worst = 0.0;
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = mu + 1; nu < 4; ++nu)
      for (int la = nu + 1; la < 4; ++la) {
        const AlgebraCoeffs r = term(mu, nu, la) + term(nu, la, mu) + term(la, mu, nu);
        worst = std::max(worst, r.norm());
      }
  return worst;
}

// ---------------------------------------------------------------------------

const std::array<const char*, 5>& scenario_names() {
  static const std::array<const char*, 5> names = {
      "u1-zero", "u1-constant-B", "u1-constant-E", "u1-coulomb", "su2-constant"};
  return names;
}

namespace {

ScenarioParams merge_params(const std::string& name, const ScenarioParams& defaults,
                            const ScenarioParams& given) {
  ScenarioParams out = defaults;
  for (const auto& [key, value] : given) {
    if (!defaults.count(key))
      fail(ErrorKind::Scenario, "scenario '" + name + "': unknown parameter '" + key + "'");
    if (!std::isfinite(value))
      fail(ErrorKind::Scenario, "scenario '" + name + "': parameter '" + key + "' not finite");
    out[key] = value;
  }
  return out;
}

AlgebraCoeffs u1(double v) {
  AlgebraCoeffs c(1);
  c[0] = v;
  return c;
}

}  // namespace

GaugeFieldConfig scenario(const std::string& name, const ScenarioParams& given) {
  if (name == "u1-zero") {
    const ScenarioParams p = merge_params(name, {}, given);
    return GaugeFieldConfig(
        GroupId::U1, name, [](const BaseEvent&) { return Potential{u1(0), u1(0), u1(0), u1(0)}; },
        [](const BaseEvent&) { return CurvatureValue(GroupId::U1); }, {}, p);
  }
  if (name == "u1-constant-B") {
    const ScenarioParams p = merge_params(name, {{"B", 0.5}}, given);
    const double b = p.at("B");
    return GaugeFieldConfig(
        GroupId::U1, name,
        [b](const BaseEvent& x) {
          return Potential{u1(0), u1(-0.5 * b * x[2]), u1(0.5 * b * x[1]), u1(0)};
        },
        [b](const BaseEvent&) {
          CurvatureValue f(GroupId::U1);
          f.set(1, 2, u1(b));
          return f;
        },
        {}, p);
  }
  if (name == "u1-constant-E") {
    const ScenarioParams p = merge_params(name, {{"E", 0.5}}, given);
    const double e = p.at("E");
    return GaugeFieldConfig(
        GroupId::U1, name,
        [e](const BaseEvent& x) { return Potential{u1(-e * x[1]), u1(0), u1(0), u1(0)}; },
        [e](const BaseEvent&) {
          CurvatureValue f(GroupId::U1);
          f.set(0, 1, u1(e));
          return f;
        },
        {}, p);
  }
  if (name == "u1-coulomb") {
    const ScenarioParams p =
        merge_params(name, {{"kappa", 1.0}, {"r_min", 1e-3}}, given);
    const double kappa = p.at("kappa");
    const double r_min = p.at("r_min");
    if (!(r_min > 0.0)) fail(ErrorKind::Scenario, "u1-coulomb: r_min must be positive");
    auto radius = [](const BaseEvent& x) { return x.tail<3>().norm(); };
    return GaugeFieldConfig(
        GroupId::U1, name,
        [kappa, radius](const BaseEvent& x) {
          return Potential{u1(kappa / radius(x)), u1(0), u1(0), u1(0)};
        },
        [kappa, radius](const BaseEvent& x) {
          // F_{0i} = -d_i (kappa / r) = kappa x^i / r^3
          const double r = radius(x);
          const double r3 = r * r * r;
          CurvatureValue f(GroupId::U1);
          for (int i = 1; i < 4; ++i) f.set(0, i, u1(kappa * x[i] / r3));
          return f;
        },
        [r_min, radius](const BaseEvent& x) { return radius(x) > r_min; }, p);
  }
  if (name == "su2-constant") {
    const ScenarioParams p = merge_params(name, {{"a", 0.4}, {"b", 0.3}}, given);
    const double a = p.at("a");
    const double b = p.at("b");
    const AlgebraCoeffs zero = AlgebraCoeffs::Zero(3);
    AlgebraCoeffs a1 = zero, a2 = zero;
    a1[0] = a;
    a2[1] = b;
    return GaugeFieldConfig(
        GroupId::SU2, name,
        [zero, a1, a2](const BaseEvent&) { return Potential{zero, a1, a2, zero}; },
        [a, b](const BaseEvent&) {
          // d A = 0, so F_12 = [a T1, b T2] = a b T3.
          CurvatureValue f(GroupId::SU2);
          AlgebraCoeffs f12 = AlgebraCoeffs::Zero(3);
          f12[2] = a * b;
          f.set(1, 2, f12);
          return f;
        },
        {}, p);
  }
  fail(ErrorKind::Scenario, "unknown scenario '" + name + "'");
}

}  // namespace kkz
