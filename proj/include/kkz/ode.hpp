#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include <Eigen/Dense>

#include "kkz/trajectory.hpp"

namespace kkz {

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-9;
  /// Zero selects an automatic initial step.
  double initial_step = 0.0;
  /// Steps below min_step_ratio * max(1, |s|) count as underflow.
  double min_step_ratio = 1e-13;
  std::size_t max_steps = 5'000'000;
};

/// Dormand-Prince 5(4) embedded pair with the 4th-order continuous extension
/// for output at arbitrary points. Errors are reported as ErrorKind::Integration.
class Dopri5 {
 public:
  using State = Eigen::VectorXd;
  using Rhs = std::function<void(double s, const State& y, State& dy)>;
  /// Called at each requested output point, in order.
  using Observer = std::function<void(double s, const State& y)>;
  /// Called after every accepted step; may modify the state in place and
  /// must return true when it does (the first stage is then recomputed).
  using StepHook = std::function<bool(double s, State& y)>;
  /// Upper bound on the next step size given the current state.
  using StepLimit = std::function<double(double s, const State& y)>;

  Dopri5(Rhs rhs, OdeOptions options);

  /// Integrates from (s0, y0) through every point of `grid` (sorted,
  /// grid.front() >= s0) and returns the state at grid.back().
  State integrate(double s0, State y0, std::span<const double> grid,
                  const Observer& observer, const StepHook& hook = {},
                  const StepLimit& limit = {});

  const IntegratorStats& stats() const noexcept { return stats_; }

 private:
  double initial_step(double s, const State& y, const State& f, double direction_span);
  double error_norm(const State& err, const State& y0, const State& y1) const;

  Rhs rhs_;
  OdeOptions opt_;
  IntegratorStats stats_;
};

}  // namespace kkz
