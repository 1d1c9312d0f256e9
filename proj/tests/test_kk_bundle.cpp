#include <doctest.h>

#include <cmath>

#include "kkz/base_dynamics.hpp"
#include "kkz/error.hpp"
#include "kkz/kk_bundle.hpp"
#include "test_support.hpp"

using namespace kkz;
using kkz::testing::random_algebra;
using kkz::testing::random_event;
using kkz::testing::random_group;
using kkz::testing::random_timelike;
using kkz::testing::uniform;

namespace {

AlgebraCoeffs u1(double v) {
  AlgebraCoeffs c(1);
  c[0] = v;
  return c;
}

const BaseMetric kMink = BaseMetric::minkowski();

Vec4 safe_event(const GaugeFieldConfig& cfg) {
  Vec4 x = random_event(2.0);
  if (cfg.name() == "u1-coulomb") x.tail<3>() = x.tail<3>().normalized() * uniform(2.5, 4.0);
  return x;
}

}  // namespace

TEST_CASE("connection_form") {
  SUBCASE("flat connection returns the fiber velocity") {
    const auto cfg = scenario("u1-zero");
    const auto q = random_algebra(GroupId::U1);
    const BundlePoint p{random_event(), random_group(GroupId::U1)};
    CHECK((connection_form(cfg, p, {random_timelike(), q}) - q).norm() == 0.0);
  }
  SUBCASE("pure base motion at the identity") {
    const auto cfg = scenario("su2-constant");
    const Vec4 v = random_timelike();
    const BundlePoint p{random_event(), GroupElement::identity(GroupId::SU2)};
    const auto w = connection_form(cfg, p, {v, LieAlgebraElement::zero(GroupId::SU2)});
    CHECK((w.coeffs() - contract(cfg.potential(p.base), v)).norm() < 1e-15);
  }
  SUBCASE("u1-constant-B by direct substitution") {
    // A = (0, -B x2 / 2, B x1 / 2, 0) at x1 = 1: A_2 v^2 = 0.25, plus 0.2.
    const auto cfg = scenario("u1-constant-B", {{"B", 0.5}});
    const BundlePoint p{Vec4(0, 1, 0, 0), random_group(GroupId::U1)};
    const auto w = connection_form(cfg, p, {Vec4(1, 0, 1, 0), {GroupId::U1, u1(0.2)}});
    CHECK(w[0] == doctest::Approx(0.45).epsilon(1e-15));
  }
}

TEST_CASE("kk_metric") {
  SUBCASE("horizontal vector with A = 0") {
    const auto cfg = scenario("u1-zero");
    const Vec4 v = random_timelike();
    const BundlePoint p{random_event(), random_group(GroupId::U1)};
    const BundleVelocity w{v, LieAlgebraElement::zero(GroupId::U1)};
    CHECK(kk_metric(cfg, kMink, p, w, w) == doctest::Approx(kMink.dot(p.base, v, v)));
  }
  SUBCASE("pure fiber vectors are spacelike") {
    for (const auto* name : {"u1-constant-B", "su2-constant"}) {
      const auto cfg = scenario(name);
      const BundlePoint p{random_event(), random_group(cfg.group())};
      const BundleVelocity w{Vec4::Zero(), random_algebra(cfg.group())};
      CHECK(kk_metric(cfg, kMink, p, w, w) < 0.0);
    }
  }
  SUBCASE("agrees with the chart matrix on mixed vectors") {
    for (const auto* name : {"u1-constant-B", "su2-constant", "u1-coulomb"}) {
      const auto cfg = scenario(name);
      for (int i = 0; i < 20; ++i) {
        const BundlePoint p{safe_event(cfg), random_group(cfg.group())};
        const BundleVelocity w1{random_event(1.0), random_algebra(cfg.group())};
        const BundleVelocity w2{random_event(1.0), random_algebra(cfg.group())};
        const BundleChart chart =
            BundleChart::centered_at(p.fiber * exp_map(random_algebra(cfg.group(), 0.3)));
        const auto [y, yd1] = to_chart(chart, p, w1);
        const auto yd2 = to_chart(chart, p, w2).second;
        const Eigen::MatrixXd h = metric_matrix_in_chart(cfg, kMink, chart, y);
        CHECK(yd1.dot(h * yd2) == doctest::Approx(kk_metric(cfg, kMink, p, w1, w2)).epsilon(1e-10));
        CHECK(kk_metric(cfg, kMink, p, w1, w2) ==
              doctest::Approx(kk_metric(cfg, kMink, p, w2, w1)).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("metric_matrix_in_chart") {
  SUBCASE("product metric at the chart center") {
    const auto cfg = scenario("u1-zero");
    const auto chart = BundleChart::centered_at(GroupElement::identity(GroupId::U1));
    Eigen::VectorXd y = Eigen::VectorXd::Zero(5);
    y.head<4>() = random_event();
    Eigen::VectorXd diag(5);
    diag << 1, -1, -1, -1, -1;
    CHECK((metric_matrix_in_chart(cfg, kMink, chart, y) - Eigen::MatrixXd(diag.asDiagonal())).norm() == 0.0);
  }
  SUBCASE("signature (1, 3 + dim G)") {
    const auto cfg = scenario("su2-constant");
    for (int i = 0; i < 50; ++i) {
      const auto chart = BundleChart::centered_at(random_group(GroupId::SU2));
      Eigen::VectorXd y(7);
      y << random_event(), kkz::testing::random_coeffs(GroupId::SU2, 0.8);
      const Eigen::MatrixXd h = metric_matrix_in_chart(cfg, kMink, chart, y);
      CHECK((h - h.transpose()).norm() < 1e-14);
      const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues();
      CHECK((ev.array() > 0).count() == 1);
      CHECK((ev.array() < 0).count() == 6);
    }
  }
  SUBCASE("u1-constant-B base-fiber block is k(A_mu T, T) = -A_mu") {
    const auto cfg = scenario("u1-constant-B");
    const auto chart = BundleChart::centered_at(random_group(GroupId::U1));
    Eigen::VectorXd y(5);
    y << random_event(), 0.4;
    const Eigen::MatrixXd h = metric_matrix_in_chart(cfg, kMink, chart, y);
    const Potential a = cfg.potential(y.head<4>());
    for (int mu = 0; mu < 4; ++mu) CHECK(h(mu, 4) == doctest::Approx(-a[mu][0]).epsilon(1e-14));
    CHECK(h(4, 4) == -1.0);
  }
  SUBCASE("outside the chart radius") {
    const auto cfg = scenario("su2-constant");
    const auto chart = BundleChart::centered_at(GroupElement::identity(GroupId::SU2));
    Eigen::VectorXd y = Eigen::VectorXd::Zero(7);
    y[4] = 2.0;
    try {
      metric_matrix_in_chart(cfg, kMink, chart, y);
      FAIL("expected chart-domain error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ChartDomain);
    }
  }
}

TEST_CASE("integrate_bundle_geodesic") {
  SUBCASE("product geometry gives a straight line and constant fiber") {
    const auto cfg = scenario("u1-zero");
    const BundlePoint p0{Vec4(0, 1, 2, 3), random_group(GroupId::U1)};
    const Vec4 v = random_timelike();
    const auto traj = integrate_bundle_geodesic(
        cfg, kMink, p0, {v, LieAlgebraElement::zero(GroupId::U1)}, 5.0, {.samples = 64});
    REQUIRE(traj.size() == 64);
    for (const auto& smp : traj.samples) {
      CHECK((smp.p.base - (p0.base + smp.s * v)).norm() <= 1e-8);
      CHECK((smp.p.fiber.matrix() - p0.fiber.matrix()).norm() <= 1e-8);
    }
  }
  SUBCASE("u1-constant-B projects onto the closed-form cyclotron orbit") {
    // Geodesic equations of h give a^1 = Q B v^2, a^2 = -Q B v^1.
    const double b = 0.5, q = 0.3, w = q * b;
    const auto cfg = scenario("u1-constant-B", {{"B", b}});
    const BundlePoint p0{Vec4(0, 0.5, -0.2, 0), GroupElement::identity(GroupId::U1)};
    const Vec4 v(std::sqrt(1 + 0.36 + 0.04), 0.6, 0.2, 0.0);
    const auto w0 = velocity_with_charge(cfg, p0, v, {GroupId::U1, u1(q)});
    const auto traj = integrate_bundle_geodesic(cfg, kMink, p0, w0, 10.0, {.samples = 101});
    double worst = 0.0;
    for (const auto& smp : traj.samples) {
      const double s = smp.s;
      const Vec4 oracle(p0.base[0] + v[0] * s,
                        p0.base[1] + (v[1] * std::sin(w * s) + v[2] * (1 - std::cos(w * s))) / w,
                        p0.base[2] + (-v[1] * (1 - std::cos(w * s)) + v[2] * std::sin(w * s)) / w,
                        0.0);
      worst = std::max(worst, (smp.p.base - oracle).norm());
    }
    CHECK(worst <= 1e-6);
    CHECK(traj.stats.recenterings > 0);
  }
  SUBCASE("time reversal returns to the start") {
    const auto cfg = scenario("su2-constant");
    const BundlePoint p0{Vec4(0, 0.3, 0.1, -0.2), random_group(GroupId::SU2)};
    const BundleVelocity w0{random_timelike(), random_algebra(GroupId::SU2, 0.5)};
    const auto fwd = integrate_bundle_geodesic(cfg, kMink, p0, w0, 5.0, {.samples = 16});
    const auto& end = fwd.samples.back();
    const auto back = integrate_bundle_geodesic(cfg, kMink, end.p, {-end.w.base, -end.w.fiber},
                                                5.0, {.samples = 16});
    const auto& ret = back.samples.back();
    CHECK((ret.p.base - p0.base).norm() <= 1e-6);
    CHECK((ret.p.fiber.matrix() - p0.fiber.matrix()).norm() <= 1e-6);
  }
  SUBCASE("invalid input") {
    const auto cfg = scenario("u1-zero");
    const BundlePoint p0{Vec4::Zero(), GroupElement::identity(GroupId::U1)};
    const BundleVelocity w0{Vec4(1, 0, 0, 0), LieAlgebraElement::zero(GroupId::U1)};
    CHECK_THROWS_AS(integrate_bundle_geodesic(cfg, kMink, p0, w0, 1.0, {.tol = 0.0}), Error);
    CHECK_THROWS_AS(integrate_bundle_geodesic(cfg, kMink, p0, w0, -1.0), Error);
  }
  SUBCASE("leaving the field domain is an integration error") {
    const auto cfg = scenario("u1-coulomb", {{"r_min", 0.5}});
    const BundlePoint p0{Vec4(0, 2, 0, 0), GroupElement::identity(GroupId::U1)};
    const BundleVelocity w0{Vec4(std::sqrt(1.25), -0.5, 0, 0), LieAlgebraElement::zero(GroupId::U1)};
    try {
      integrate_bundle_geodesic(cfg, kMink, p0, w0, 10.0);
      FAIL("expected integration error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Integration);
    }
  }
}

TEST_CASE("charge_along") {
  SUBCASE("geodesic keeps omega constant") {
    const auto cfg = scenario("u1-constant-B");
    const BundlePoint p0{Vec4(0, 1, 0, 0), GroupElement::identity(GroupId::U1)};
    const auto w0 = velocity_with_charge(cfg, p0, Vec4(std::sqrt(1.25), 0.5, 0, 0),
                                         {GroupId::U1, u1(0.3)});
    const auto traj = integrate_bundle_geodesic(cfg, kMink, p0, w0, 10.0);
    const auto q = charge_along(cfg, traj);
    CHECK(q.charge.front()[0] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(q.max_deviation <= 1e-6);
  }
  SUBCASE("constant-pitch helix off the gauge origin is not a geodesic") {
    const double b = 0.5, w = 0.15, u = 0.6, gamma = std::sqrt(1 + u * u), r = u / w;
    const auto cfg = scenario("u1-constant-B", {{"B", b}});
    BundleTrajectory t;
    t.group = GroupId::U1;
    for (int i = 0; i < 100; ++i) {
      const double s = 0.1 * i, pitch = 0.3;
      const Vec4 x(gamma * s, 2.0 + r * std::cos(w * s), r * std::sin(w * s), 0);
      const Vec4 v(gamma, -u * std::sin(w * s), u * std::cos(w * s), 0);
      t.samples.push_back({s, {x, exp_map({GroupId::U1, u1(pitch * s)})},
                           {v, {GroupId::U1, u1(pitch)}}});
    }
    CHECK(charge_along(cfg, t).max_deviation > 1e-3);
  }
  SUBCASE("flat connection: charge is the fiber velocity") {
    const auto cfg = scenario("u1-zero");
    const BundlePoint p0{Vec4::Zero(), GroupElement::identity(GroupId::U1)};
    const BundleVelocity w0{Vec4(1.1, 0.2, 0.3, 0.1), {GroupId::U1, u1(0.7)}};
    const auto traj = integrate_bundle_geodesic(cfg, kMink, p0, w0, 3.0, {.samples = 20});
    for (std::size_t i = 0; i < traj.size(); ++i)
      CHECK(charge_along(cfg, traj).charge[i][0] == traj.samples[i].w.fiber[0]);
  }
}

TEST_CASE("project drops the fiber") {
  const auto cfg = scenario("su2-constant");
  const BundlePoint p0{Vec4(0, 0.2, 0.1, 0), random_group(GroupId::SU2)};
  const auto traj = integrate_bundle_geodesic(
      cfg, kMink, p0, {random_timelike(), random_algebra(GroupId::SU2)}, 2.0, {.samples = 30});
  const auto base = project(traj);
  REQUIRE(base.size() == traj.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(base.samples[i].s == traj.samples[i].s);
    CHECK(base.samples[i].x == traj.samples[i].p.base);
    CHECK(base.samples[i].v == traj.samples[i].w.base);
  }
}

TEST_CASE("conservation along bundle geodesics, every scenario") {
  for (const auto* name : scenario_names()) {
    const auto cfg = scenario(name);
    for (int i = 0; i < 20; ++i) {
      const BundlePoint p0{safe_event(cfg), random_group(cfg.group())};
      Vec4 v = random_timelike(0.5);
      double qscale = 0.4;
      if (cfg.name() == "u1-coulomb") {
        // Tangential launch with a weak charge so the orbit stays far from r_min.
        const Eigen::Vector3d rhat = p0.base.tail<3>().normalized();
        Eigen::Vector3d t = rhat.cross(Eigen::Vector3d(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1))).normalized() * uniform(0.3, 0.5);
        v = Vec4(std::sqrt(1 + t.squaredNorm()), t[0], t[1], t[2]);
        qscale = 0.05;
      }
      const auto q = random_algebra(cfg.group(), qscale);
      const auto w0 = velocity_with_charge(cfg, p0, v, q);
      const auto traj = integrate_bundle_geodesic(cfg, kMink, p0, w0, 10.0, {.tol = 1e-9, .samples = 128});
      CHECK(charge_along(cfg, traj).max_deviation <= 1e-6);
      const double h0 = kk_metric(cfg, kMink, p0, w0, w0);
      double drift = 0.0, split = 0.0;
      for (const auto& smp : traj.samples) {
        const double h = kk_metric(cfg, kMink, smp.p, smp.w, smp.w);
        drift = std::max(drift, std::abs(h - h0));
        // g(v, v) = h - k(Q, Q)
        split = std::max(split, std::abs(kMink.dot(smp.p.base, smp.w.base, smp.w.base) -
                                         (h - cfg.form()(q, q))));
      }
      CHECK(drift <= 1e-6);
      CHECK(split <= 1e-6);
    }
  }
}

TEST_CASE("chart independence of the projected trajectory") {
  const auto cfg = scenario("su2-constant");
  const BundlePoint p0{Vec4(0, 0.2, -0.1, 0.3), random_group(GroupId::SU2)};
  const auto w0 = velocity_with_charge(cfg, p0, random_timelike(), random_algebra(GroupId::SU2, 0.5));
  const auto a = integrate_bundle_geodesic(cfg, kMink, p0, w0, 10.0, {.tol = 1e-11, .samples = 64});
  const auto anchor = p0.fiber * exp_map(random_algebra(GroupId::SU2, 0.4));
  const auto b = integrate_bundle_geodesic(cfg, kMink, p0, w0, 10.0,
                                           {.tol = 1e-11, .samples = 64, .chart_anchor = anchor});
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, (a.samples[i].p.base - b.samples[i].p.base).norm());
  CHECK(worst <= 1e-8);
}

TEST_CASE("finite-difference Christoffel convergence") {
  // Geodesic defect against a reference run shrinks ~4x per halving of h_fd.
  const auto cfg = scenario("su2-constant", {{"a", 0.8}, {"b", 0.6}});
  const BundlePoint p0{Vec4(0, 0.2, -0.1, 0.3), GroupElement::identity(GroupId::SU2)};
  AlgebraCoeffs q(3);
  q << 0.9, -0.5, 0.7;
  const auto w0 = velocity_with_charge(cfg, p0, Vec4(std::sqrt(1.29), 0.5, 0.2, -0.1),
                                       {GroupId::SU2, q});
  auto run = [&](double scale) {
    return integrate_bundle_geodesic(cfg, kMink, p0, w0, 4.0,
                                     {.tol = 1e-12, .samples = 9, .fd_scale = scale});
  };
  const auto ref = run(1e-5);
  auto defect = [&](const BundleTrajectory& t) {
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
      worst = std::max(worst, (t.samples[i].p.base - ref.samples[i].p.base).norm());
    return worst;
  };
  const double ratio = defect(run(4e-2)) / defect(run(2e-2));
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("bundle_geodesic_residual") {
  const auto cfg = scenario("su2-constant");
  const BundlePoint p0{Vec4(0, 0.2, -0.1, 0.3), random_group(GroupId::SU2)};
  const auto w0 = velocity_with_charge(cfg, p0, random_timelike(), random_algebra(GroupId::SU2, 0.5));
  const auto traj = integrate_bundle_geodesic(cfg, kMink, p0, w0, 5.0, {.samples = 256});
  const auto res = bundle_geodesic_residual(cfg, kMink, traj);
  CHECK(res.residual.size() == 252);
  CHECK(res.max <= 1e-6);

  BundleTrajectory short_traj = traj;
  short_traj.samples.erase(short_traj.samples.begin() + 4, short_traj.samples.end());
  CHECK_THROWS_AS(bundle_geodesic_residual(cfg, kMink, short_traj), Error);
}
