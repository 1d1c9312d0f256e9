#include <doctest.h>

#include <cmath>

#include "kkz/error.hpp"
#include "kkz/gauge_field.hpp"
#include "test_support.hpp"

using namespace kkz;
using kkz::testing::random_event;
using kkz::testing::uniform;

namespace {

AlgebraCoeffs u1(double v) {
  AlgebraCoeffs c(1);
  c[0] = v;
  return c;
}

double fd_tolerance(const Vec4& x, double scale = kDefaultFdScale, double k = 10.0) {
  const double h = fd_step(x.cwiseAbs().maxCoeff(), scale);
  return k * h * h;
}

/// Smooth random gauge map exp(lambda^a(x) T_a) with bounded derivatives.
GaugeMap smooth_gauge(GroupId group) {
  const int d = algebra_dim(group);
  std::vector<Eigen::Vector4d> k(d), p(d);
  std::vector<double> amp(d);
  for (int a = 0; a < d; ++a) {
    k[a] = kkz::testing::random_event(0.8);
    p[a] = kkz::testing::random_event(1.0);
    amp[a] = uniform(0.3, 0.9);
  }
  return [=](const BaseEvent& x) {
    AlgebraCoeffs lam(d);
    for (int a = 0; a < d; ++a) lam[a] = amp[a] * std::sin(k[a].dot(x) + p[a][0]) * std::cos(0.3 * p[a].dot(x));
    return exp_map({group, lam});
  };
}

}  // namespace

TEST_CASE("scenario library") {
  SUBCASE("u1-zero") {
    const auto cfg = scenario("u1-zero");
    const Vec4 x = random_event();
    for (const auto& a : cfg.potential(x)) CHECK(a.norm() == 0.0);
    CHECK(curvature_fd(cfg, x).max_norm() == 0.0);
  }
  SUBCASE("u1-constant-B, B = 0.5") {
    const auto cfg = scenario("u1-constant-B", {{"B", 0.5}});
    for (int i = 0; i < 5; ++i) {
      const Vec4 x = random_event();
      const auto f = curvature_fd(cfg, x);
      CHECK(f(1, 2)[0] == doctest::Approx(0.5).epsilon(1e-9));
      CHECK(f(2, 1)[0] == doctest::Approx(-0.5).epsilon(1e-9));
      for (int mu = 0; mu < 4; ++mu)
        for (int nu = mu + 1; nu < 4; ++nu)
          if (!(mu == 1 && nu == 2)) CHECK(std::abs(f(mu, nu)[0]) < 1e-9);
    }
  }
  SUBCASE("u1-constant-E: F_01 = E") {
    const auto cfg = scenario("u1-constant-E", {{"E", 0.7}});
    CHECK(curvature_fd(cfg, random_event())(0, 1)[0] == doctest::Approx(0.7).epsilon(1e-9));
  }
  SUBCASE("u1-coulomb at (0, 2, 0, 0)") {
    // A_0 = 1/r, so d_1 A_0 = -1/4 and F_01 = -d_1 A_0 = +1/4.
    const auto cfg = scenario("u1-coulomb", {{"kappa", 1.0}});
    const Vec4 x(0, 2, 0, 0);
    CHECK(curvature_fd(cfg, x)(0, 1)[0] == doctest::Approx(0.25).epsilon(1e-8));
    CHECK(curvature_fd(cfg, x)(1, 0)[0] == doctest::Approx(-0.25).epsilon(1e-8));
    CHECK(cfg.analytic_curvature(x)(0, 1)[0] == 0.25);
    try {
      cfg.potential(Vec4(0, 1e-4, 0, 0));
      FAIL("expected domain error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ChartDomain);
    }
  }
  SUBCASE("su2-constant: F_12 = a b T3 from the bracket alone") {
    const auto cfg = scenario("su2-constant", {{"a", 0.4}, {"b", 0.3}});
    const auto f = curvature_fd(cfg, random_event());
    CHECK(f(1, 2)[2] == doctest::Approx(0.12).epsilon(1e-12));
    CHECK(std::abs(f(1, 2)[0]) + std::abs(f(1, 2)[1]) < 1e-14);
  }
  SUBCASE("errors") {
    for (const auto& bad : {"u1-dipole", "", "su3"}) {
      try {
        scenario(bad);
        FAIL("expected scenario error");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Scenario);
      }
    }
    CHECK_THROWS_AS(scenario("u1-constant-B", {{"E", 1.0}}), Error);
  }
}

TEST_CASE("curvature is antisymmetric and matches the analytic declarations") {
  for (const auto* name : scenario_names()) {
    const auto cfg = scenario(name);
    REQUIRE(cfg.has_analytic_curvature());
    for (int i = 0; i < 20; ++i) {
      Vec4 x = random_event();
      if (x.tail<3>().norm() < 0.5) x[1] += 1.0;
      const auto fd = curvature_fd(cfg, x);
      const auto an = cfg.analytic_curvature(x);
      double worst = 0.0;
      for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) {
          CHECK((fd(mu, nu) + fd(nu, mu)).norm() == 0.0);
          worst = std::max(worst, (fd(mu, nu) - an(mu, nu)).norm());
        }
      CHECK(worst <= fd_tolerance(x));
    }
  }
}

TEST_CASE("gauge_transform") {
  SUBCASE("identity map leaves A unchanged") {
    const auto cfg = scenario("su2-constant");
    const auto out = gauge_transform(cfg, [](const BaseEvent&) {
      return GroupElement::identity(GroupId::SU2);
    });
    const Vec4 x = random_event();
    for (int mu = 0; mu < 4; ++mu)
      CHECK((out.potential(x)[mu] - cfg.potential(x)[mu]).norm() < 1e-15);
  }
  SUBCASE("u1: A' = A + d lambda, F' = F") {
    const auto cfg = scenario("u1-constant-B");
    auto lambda = [](const BaseEvent& x) { return std::sin(x[0]) * x[1] + 0.5 * x[2] * x[3]; };
    const auto out = gauge_transform(
        cfg, [&](const BaseEvent& x) { return exp_map({GroupId::U1, u1(lambda(x))}); });
    const Vec4 x(0.3, 0.7, -0.2, 0.4);
    const Vec4 dl(std::cos(x[0]) * x[1], std::sin(x[0]), 0.5 * x[3], 0.5 * x[2]);
    for (int mu = 0; mu < 4; ++mu)
      CHECK(out.potential(x)[mu][0] == doctest::Approx(cfg.potential(x)[mu][0] + dl[mu]).epsilon(1e-9));
    const auto f = curvature_fd(out, x, 1e-3);
    CHECK(f(1, 2)[0] == doctest::Approx(0.5).epsilon(1e-5));
  }
  SUBCASE("constant non-abelian map conjugates A and F") {
    const auto cfg = scenario("su2-constant");
    const auto g0 = kkz::testing::random_group(GroupId::SU2);
    const auto out = gauge_transform(cfg, [&](const BaseEvent&) { return g0; });
    const Vec4 x = random_event();
    for (int mu = 0; mu < 4; ++mu)
      CHECK((out.potential(x)[mu] -
             adjoint(g0.inverse(), {GroupId::SU2, cfg.potential(x)[mu]}).coeffs())
                .norm() < 1e-12);
    const auto f = curvature_fd(out, x);
    CHECK((f(1, 2) - adjoint(g0.inverse(), cfg.analytic_curvature(x).at(1, 2)).coeffs()).norm() < 1e-9);
  }
  SUBCASE("gauge covariance of the curvature at random points") {
    // Nested differences: use a larger step so truncation dominates roundoff.
    const double scale = 1e-3;
    for (const auto* name : {"su2-constant", "u1-constant-B", "u1-coulomb"}) {
      const auto cfg = scenario(name);
      const auto gmap = smooth_gauge(cfg.group());
      const auto out = gauge_transform(cfg, gmap, scale);
      for (int i = 0; i < 20; ++i) {
        Vec4 x = random_event(1.5);
        if (x.tail<3>().norm() < 0.5) x[1] += 1.0;
        const auto fp = curvature_fd(out, x, scale);
        const auto f = cfg.analytic_curvature(x);
        const auto ginv = gmap(x).inverse();
        double worst = 0.0;
        for (int mu = 0; mu < 4; ++mu)
          for (int nu = mu + 1; nu < 4; ++nu)
            worst = std::max(worst, (fp(mu, nu) - adjoint(ginv, f.at(mu, nu)).coeffs()).norm());
        CHECK(worst <= fd_tolerance(x, scale));
      }
    }
  }
}

TEST_CASE("bianchi_residual") {
  SUBCASE("library scenarios at random points") {
    for (const auto* name : scenario_names()) {
      const auto cfg = scenario(name);
      for (int i = 0; i < 20; ++i) {
        Vec4 x = random_event();
        if (x.tail<3>().norm() < 0.5) x[1] += 1.0;
        CHECK(bianchi_residual(cfg, x) <= fd_tolerance(x));
      }
    }
    CHECK(bianchi_residual(scenario("u1-constant-B"), random_event()) <= 1e-8);
  }
  SUBCASE("potential-only field goes through nested differences") {
    const auto base = scenario("su2-constant");
    const GaugeFieldConfig cfg(GroupId::SU2, "su2-potential-only",
                               [base](const BaseEvent& x) { return base.potential(x); });
    CHECK(bianchi_residual(cfg, random_event()) <= 1e-8);
  }
  SUBCASE("Richardson on the Coulomb field") {
    const auto cfg = scenario("u1-coulomb");
    const Vec4 x(0.3, 1.2, 0.7, -0.5);
    const double r1 = bianchi_residual(cfg, x, 1e-2);
    const double r2 = bianchi_residual(cfg, x, 5e-3);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.05));
  }
  SUBCASE("corrupted curvature is detected") {
    // A = (0, 0, x1 x3, 0): F_12 = x3, F_23 = -x1, so d_3 F_12 + d_1 F_23 = 0.
    const double delta = 1e-2;
    auto potential = [](const BaseEvent& x) {
      return Potential{u1(0), u1(0), u1(x[1] * x[3]), u1(0)};
    };
    auto make = [&](double scale) {
      return GaugeFieldConfig(GroupId::U1, "sheared", potential, [scale](const BaseEvent& x) {
        CurvatureValue f(GroupId::U1);
        f.set(1, 2, u1(scale * x[3]));
        f.set(2, 3, u1(-x[1]));
        return f;
      });
    };
    const Vec4 x(0.1, 0.4, -0.3, 0.8);
    CHECK(bianchi_residual(make(1.0), x) <= fd_tolerance(x));
    CHECK(bianchi_residual(make(1.0 + delta), x) >= delta * 1.0 * (1 - 1e-6));
  }
}
