#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "kkz/base_geometry.hpp"
#include "kkz/lie.hpp"

namespace kkz {

/// Components A_mu(x), mu = 0..3, as algebra coefficients.
using Potential = std::array<AlgebraCoeffs, 4>;
using ScenarioParams = std::map<std::string, double>;

/// F_{mu nu}(x) as algebra coefficients; antisymmetric by construction since
/// only the upper triangle is stored.
class CurvatureValue {
 public:
  explicit CurvatureValue(GroupId group);

  GroupId group() const noexcept { return group_; }
  AlgebraCoeffs operator()(int mu, int nu) const;
  LieAlgebraElement at(int mu, int nu) const { return {group_, (*this)(mu, nu)}; }
  /// Sets F_{mu nu} (and thereby F_{nu mu} = -F_{mu nu}); mu != nu.
  void set(int mu, int nu, const AlgebraCoeffs& value);

  /// Largest coefficient norm over all components.
  double max_norm() const;

 private:
  static int slot(int mu, int nu);

  GroupId group_;
  std::array<AlgebraCoeffs, 6> upper_;
};

/// Analytic gauge potential on a single global chart, optionally with its
/// analytic curvature. Immutable once built.
class GaugeFieldConfig {
 public:
  using PotentialFn = std::function<Potential(const BaseEvent&)>;
  using CurvatureFn = std::function<CurvatureValue(const BaseEvent&)>;
  using DomainFn = std::function<bool(const BaseEvent&)>;

  GaugeFieldConfig(GroupId group, std::string name, PotentialFn potential,
                   CurvatureFn curvature = {}, DomainFn domain = {},
                   ScenarioParams params = {});

  GroupId group() const noexcept { return group_; }
  int dim() const noexcept { return algebra_dim(group_); }
  const std::string& name() const noexcept { return name_; }
  const ScenarioParams& params() const noexcept { return params_; }
  const BiInvariantForm& form() const noexcept { return form_; }

  bool in_domain(const BaseEvent& x) const;
  bool has_analytic_curvature() const noexcept { return static_cast<bool>(curvature_); }

  /// Throws ChartDomain outside the domain.
  Potential potential(const BaseEvent& x) const;
  /// Analytic curvature; InvalidInput if none was declared.
  CurvatureValue analytic_curvature(const BaseEvent& x) const;

  /// Same configuration with a different normalization of k.
  GaugeFieldConfig with_form(const BiInvariantForm& form) const;

 private:
  GroupId group_;
  std::string name_;
  PotentialFn potential_;
  CurvatureFn curvature_;
  DomainFn domain_;
  ScenarioParams params_;
  BiInvariantForm form_;
};

/// A_mu v^mu.
AlgebraCoeffs contract(const Potential& a, const FourVector& v);

/// F_{mu nu} = d_mu A_nu - d_nu A_mu + [A_mu, A_nu], by central differences
/// of the potential.
CurvatureValue curvature_fd(const GaugeFieldConfig& cfg, const BaseEvent& x,
                            double fd_scale = kDefaultFdScale);

/// Analytic curvature when declared, finite differences otherwise.
CurvatureValue curvature(const GaugeFieldConfig& cfg, const BaseEvent& x,
                         double fd_scale = kDefaultFdScale);

using GaugeMap = std::function<GroupElement(const BaseEvent&)>;

/// A' = g^{-1} A g + g^{-1} dg with dg by central differences. When the
/// input declares an analytic curvature the output declares g^{-1} F g.
GaugeFieldConfig gauge_transform(const GaugeFieldConfig& cfg, GaugeMap gmap,
                                 double fd_scale = kDefaultFdScale);

/// max over (mu, nu, lambda) of |d_mu F_{nu lambda} + [A_mu, F_{nu lambda}] +
/// cyclic|, with d_mu F by central differences of `curvature`.
double bianchi_residual(const GaugeFieldConfig& cfg, const BaseEvent& x,
                        double fd_scale = kDefaultFdScale);

/// Named analytic configurations:
///   u1-zero        A = 0
///   u1-constant-B  A = (0, -B x2/2, B x1/2, 0) T           params: B (0.5)
///   u1-constant-E  A = (-E x1, 0, 0, 0) T                  params: E (0.5)
///   u1-coulomb     A = (kappa / r, 0, 0, 0) T, r > r_min   params: kappa (1), r_min (1e-3)
///   su2-constant   A_1 = a T1, A_2 = b T2                  params: a (0.4), b (0.3)
/// Unknown names or parameter keys raise ErrorKind::Scenario.
GaugeFieldConfig scenario(const std::string& name, const ScenarioParams& params = {});

/// Names accepted by scenario().
const std::array<const char*, 5>& scenario_names();

}  // namespace kkz
