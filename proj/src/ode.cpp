#include "kkz/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kkz/error.hpp"

namespace kkz {

namespace {

// Butcher tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 10.0;

}  // namespace

Dopri5::Dopri5(Rhs rhs, OdeOptions options) : rhs_(std::move(rhs)), opt_(options) {
  if (!(opt_.rtol > 0.0) || !(opt_.atol > 0.0))
    fail(ErrorKind::InvalidInput, "ode: tolerances must be positive");
  stats_.tol = std::max(opt_.rtol, opt_.atol);
}

double Dopri5::error_norm(const State& err, const State& y0, const State& y1) const {
  const State sc =
      (opt_.atol + opt_.rtol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).matrix();
  return err.cwiseQuotient(sc).cwiseAbs().maxCoeff();
}

double Dopri5::initial_step(double s, const State& y, const State& f, double span) {
  if (opt_.initial_step > 0.0) return std::min(opt_.initial_step, span);
  const State sc = (opt_.atol + opt_.rtol * y.cwiseAbs().array()).matrix();
  const double n = static_cast<double>(y.size());
  const double d0 = std::sqrt(y.cwiseQuotient(sc).squaredNorm() / n);
  const double d1n = std::sqrt(f.cwiseQuotient(sc).squaredNorm() / n);
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, span);
  State y1 = y + h0 * f;
  State f1(y.size());
  rhs_(s + h0, y1, f1);
  ++stats_.rhs_evals;
  const double d2 = std::sqrt((f1 - f).cwiseQuotient(sc).squaredNorm() / n) / h0;
  const double dm = std::max(d1n, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
  return std::min({100.0 * h0, h1, span});
}

Dopri5::State Dopri5::integrate(double s0, State y, std::span<const double> grid,
                                const Observer& observer, const StepHook& hook,
                                const StepLimit& limit) {
  if (grid.empty()) return y;
  if (grid.front() < s0) fail(ErrorKind::InvalidInput, "ode: grid starts before s0");
  if (!y.allFinite()) fail(ErrorKind::Integration, "ode: non-finite initial state");

  const std::size_t n = static_cast<std::size_t>(y.size());
  const double s_end = grid.back();
  std::size_t next_out = 0;
  while (next_out < grid.size() && grid[next_out] <= s0) {
    if (observer) observer(grid[next_out], y);
    ++next_out;
  }
  if (next_out == grid.size()) return y;

  State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  rhs_(s0, y, k1);
  ++stats_.rhs_evals;

  double s = s0;
  double h = initial_step(s, y, k1, s_end - s0);
  std::size_t steps = 0;

  while (next_out < grid.size()) {
    if (++steps > opt_.max_steps)
      fail(ErrorKind::Integration, "ode: maximum number of steps exceeded at s = " +
                                       std::to_string(s));
    if (limit) h = std::min(h, limit(s, y));
    bool last = false;
    if (s + h >= s_end) {
      h = s_end - s;
      last = true;
    }
    if (h < opt_.min_step_ratio * std::max(1.0, std::abs(s)))
      fail(ErrorKind::Integration, "ode: step size underflow at s = " + std::to_string(s));

    ytmp = y + h * a21 * k1;
    rhs_(s + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    rhs_(s + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs_(s + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs_(s + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs_(s + h, ytmp, k6);
    ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    rhs_(s + h, ynew, k7);
    stats_.rhs_evals += 6;

    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, ynew);
    if (!std::isfinite(en) || !ynew.allFinite()) {
      // Treat as a rejected step; a persistently non-finite field ends in underflow.
      ++stats_.rejected;
      h *= kFacMin;
      continue;
    }

    const double fac =
        std::clamp(kSafety * std::pow(std::max(en, 1e-300), -0.2), kFacMin, kFacMax);
    if (en > 1.0) {
      ++stats_.rejected;
      h *= std::max(kFacMin, fac);
      continue;
    }

    ++stats_.accepted;
    const double s_new = last ? s_end : s + h;

    // Dense output over (s, s_new].
    if (next_out < grid.size() && grid[next_out] <= s_new) {
      const State ydiff = ynew - y;
      const State bspl = h * k1 - ydiff;
      const State r4 = ydiff - h * k7 - bspl;
      const State r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      while (next_out < grid.size() && grid[next_out] <= s_new) {
        const double t = grid[next_out];
        if (t == s_new) {
          if (observer) observer(t, ynew);
        } else {
          const double th = (t - s) / h;
          const double th1 = 1.0 - th;
          ytmp = y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)));
          if (observer) observer(t, ytmp);
        }
        ++next_out;
      }
    }

    y.swap(ynew);
    k1.swap(k7);
    s = s_new;
    if (hook && hook(s, y)) {
      if (!y.allFinite()) fail(ErrorKind::Integration, "ode: non-finite state after hook");
      rhs_(s, y, k1);
      ++stats_.rhs_evals;
    }
    h *= last ? 1.0 : fac;
  }
  return y;
}

}  // namespace kkz
