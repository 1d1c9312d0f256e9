#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "kkz/lie.hpp"

namespace kkz {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// Point of the base space-time, coordinates (t, x, y, z) with c = 1.
using BaseEvent = Vec4;
/// Tangent vector at a BaseEvent.
using FourVector = Vec4;

struct IntegratorStats {
  double tol = 0.0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
  std::size_t recenterings = 0;
};

struct TrajectorySample {
  double s = 0.0;
  BaseEvent x = BaseEvent::Zero();
  FourVector v = FourVector::Zero();
  /// Gauge-frame charge; empty when the trajectory carries none.
  AlgebraCoeffs q;
};

/// Sampled base curve parameterized by s. `has_velocity` is false for
/// position-only input, in which case `v` is meaningless until derived.
struct Trajectory {
  std::vector<TrajectorySample> samples;
  bool has_velocity = true;
  IntegratorStats stats;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

}  // namespace kkz
