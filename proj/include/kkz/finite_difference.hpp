#pragma once

// Fourth-order difference stencils on uniformly spaced samples.

#include <cmath>
#include <cstddef>
#include <vector>

#include "kkz/error.hpp"

namespace kkz::fd {

/// Uniform spacing of `s`, or an InvalidInput error if the spacing varies by
/// more than `rel_tol` relative to the mean step.
inline double uniform_step(const std::vector<double>& s, double rel_tol = 1e-6) {
  if (s.size() < 2) fail(ErrorKind::InvalidInput, "need at least two samples");
  const double h = (s.back() - s.front()) / static_cast<double>(s.size() - 1);
  if (!(h > 0.0)) fail(ErrorKind::InvalidInput, "parameter must be increasing");
  for (std::size_t i = 1; i < s.size(); ++i)
    if (std::abs((s[i] - s[i - 1]) - h) > rel_tol * h)
      fail(ErrorKind::InvalidInput, "samples are not uniformly spaced");
  return h;
}

/// First derivative at sample i of f (any vector-space type), using the
/// five-point stencil that fits inside [0, n).
template <class T>
T derivative(const std::vector<T>& f, std::size_t i, double h) {
  const std::size_t n = f.size();
  if (n < 5) fail(ErrorKind::InvalidInput, "derivative needs at least 5 samples");
  if (i >= 2 && i + 2 < n)
    return (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
  if (i == 0)
    return (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) /
           (12.0 * h);
  if (i == 1)
    return (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
  if (i == n - 1)
    return (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] +
            3.0 * f[n - 5]) /
           (12.0 * h);
  // i == n - 2
  return (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] -
          f[n - 5]) /
         (12.0 * h);
}

/// Central second derivative at interior sample i (2 <= i < n - 2).
template <class T>
T second_derivative(const std::vector<T>& f, std::size_t i, double h) {
  return (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) /
         (12.0 * h * h);
}

}  // namespace kkz::fd
