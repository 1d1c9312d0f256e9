#pragma once

// Compact matrix Lie groups U(1) and SU(2) in their defining representations.
//
// Conventions (fixed once, everything downstream depends on them):
//   U(1):  single generator T = i (1x1).
//   SU(2): T_a = -(i/2) sigma_a with the usual Pauli ordering, so that
//          [T_1, T_2] = T_3 and cyclic.
// Algebra elements are anti-Hermitian and are stored as real coefficients in
// this basis. No factor of i is ever pulled out.

#include <complex>
#include <string_view>

#include <Eigen/Dense>

namespace kkz {

using cplx = std::complex<double>;

/// Square complex matrix of size at most 2x2, stored inline.
using GroupMatrix =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;
/// Real coefficient vector of length at most 3, stored inline.
using AlgebraCoeffs = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
/// Real square matrix acting on algebra coefficients.
using AlgebraMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

enum class GroupId { U1, SU2 };

int algebra_dim(GroupId group) noexcept;
int rep_dim(GroupId group) noexcept;
std::string_view to_string(GroupId group) noexcept;
GroupId parse_group(std::string_view name);

class LieAlgebraElement {
 public:
  /// Throws InvalidInput when the coefficient count does not match the group
  /// or a coefficient is not finite.
  LieAlgebraElement(GroupId group, AlgebraCoeffs coeffs);

  static LieAlgebraElement zero(GroupId group);
  static LieAlgebraElement basis(GroupId group, int index);
  /// Coefficients of the anti-Hermitian part of `m` with respect to the basis.
  static LieAlgebraElement from_matrix(GroupId group, const GroupMatrix& m);

  GroupId group() const noexcept { return group_; }
  int dim() const noexcept { return static_cast<int>(coeffs_.size()); }
  const AlgebraCoeffs& coeffs() const noexcept { return coeffs_; }
  double operator[](int a) const { return coeffs_[a]; }

  GroupMatrix matrix() const;
  /// Euclidean norm of the coefficient vector.
  double norm() const { return coeffs_.norm(); }

  LieAlgebraElement operator+(const LieAlgebraElement& o) const;
  LieAlgebraElement operator-(const LieAlgebraElement& o) const;
  LieAlgebraElement operator-() const { return {group_, -coeffs_}; }
  LieAlgebraElement operator*(double s) const { return {group_, s * coeffs_}; }
  friend LieAlgebraElement operator*(double s, const LieAlgebraElement& x) {
    return x * s;
  }

 private:
  GroupId group_;
  AlgebraCoeffs coeffs_;
};

class GroupElement {
 public:
  /// Throws InvalidInput unless the matrix is unitary to 1e-10 (and has unit
  /// determinant to 1e-10 for SU(2)).
  GroupElement(GroupId group, GroupMatrix m);

  static GroupElement identity(GroupId group);
  /// Nearest group element to an almost-unitary matrix: phase normalization
  /// for U(1), quaternion normalization for SU(2).
  static GroupElement project(GroupId group, const GroupMatrix& m);

  GroupId group() const noexcept { return group_; }
  const GroupMatrix& matrix() const noexcept { return m_; }

  GroupElement inverse() const;
  GroupElement operator*(const GroupElement& o) const;

  /// Frobenius norm of g^dagger g - I.
  double unitarity_defect() const;
  /// Re-projects onto the group if the unitarity defect exceeds `threshold`.
  GroupElement reunitarized(double threshold = 1e-12) const;

 private:
  struct Unchecked {};
  GroupElement(GroupId group, GroupMatrix m, Unchecked)
      : group_(group), m_(std::move(m)) {}

  GroupId group_;
  GroupMatrix m_;
};

/// Ad-invariant, negative-definite symmetric form k(X, Y) = c Re tr(X Y).
/// The canonical normalization makes every basis generator have k-norm -1.
class BiInvariantForm {
 public:
  BiInvariantForm(GroupId group, double c);
  static BiInvariantForm canonical(GroupId group);

  GroupId group() const noexcept { return group_; }
  double c() const noexcept { return c_; }
  /// k(T_a, T_b) = -scale() * delta_ab.
  double scale() const noexcept { return scale_; }

  double operator()(const LieAlgebraElement& x,
                    const LieAlgebraElement& y) const;
  /// Same form on raw coefficient vectors.
  double eval(const AlgebraCoeffs& x, const AlgebraCoeffs& y) const {
    return -scale_ * x.dot(y);
  }

 private:
  GroupId group_;
  double c_;
  double scale_;
};

LieAlgebraElement bracket(const LieAlgebraElement& x,
                          const LieAlgebraElement& y);
/// k with the canonical normalization.
double form_k(const LieAlgebraElement& x, const LieAlgebraElement& y);

GroupElement exp_map(const LieAlgebraElement& x);
/// Principal logarithm. Throws ChartDomain at or beyond the cut locus
/// (U(1): g = -1; SU(2): rotation angle >= pi, detected from the trace).
LieAlgebraElement log_map(const GroupElement& g);

/// g X g^{-1}.
LieAlgebraElement adjoint(const GroupElement& g, const LieAlgebraElement& x);

/// Matrix of ad_X acting on coefficients: coeffs([X, Y]) = ad_matrix(X) * y.
AlgebraMatrix ad_matrix(const LieAlgebraElement& x);
/// Matrix of Ad_g acting on coefficients.
AlgebraMatrix adjoint_matrix(const GroupElement& g);

/// Left-trivialized differential of exp at theta:
///   exp(-X) d exp(X) = J(theta) dtheta,  X = theta^a T_a.
AlgebraMatrix dexp_matrix(GroupId group, const AlgebraCoeffs& theta);

}  // namespace kkz
