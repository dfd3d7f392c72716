// Copyright 2026 The cbf-laplace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cbf/field.hpp"
#include "cbf/transform.hpp"

namespace cbf {

/// Coefficients of the damped flow: viscosity mu, Darcy alpha, Forchheimer
/// beta and absorption exponent r.
struct PhysicalParams {
  double mu = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  double r = 4.0;
  /// Permits zero coefficients; only for closed-form oracle checks.
  bool test_mode = false;
  /// Switching convection off is allowed only together with test_mode.
  bool convection = true;

  double convection_factor() const { return convection ? 1.0 : 0.0; }

  /// Throws DomainError when the standing assumptions fail for `dim`.
  void validate(int dim) const;

  /// (r-3)/(2 mu (r-1)) [4/(beta mu (r-1))]^(2/(r-3)). For r = 3 this is the
  /// r -> 3+ limit: 0 when the bracket is <= 1, +inf otherwise.
  double rho() const;
  /// Same form with the bracket 1/(beta mu (r-1)).
  double rho_star() const;
};

/// Time-dependent solenoidal forcing f(t).
class ForcingSpec {
 public:
  enum class Kind { Zero, Constant, SingleMode };

  static ForcingSpec zero();
  static ForcingSpec constant(SpectralField field);
  /// field * cos(omega t): a single-mode pattern with a smooth envelope.
  static ForcingSpec single_mode(SpectralField field, double omega);

  Kind kind() const { return kind_; }
  bool is_zero() const { return kind_ == Kind::Zero; }
  /// Adds f(t) into `out`.
  void add_to(double t, SpectralField& out) const;
  SpectralField value(double t, Shape shape) const;
  /// Bound R on ||f(t)||_V.
  double v_bound() const;
  const SpectralField& pattern() const { return field_; }
  double omega() const { return omega_; }

 private:
  Kind kind_ = Kind::Zero;
  SpectralField field_;
  double omega_ = 0.0;
};

/// Pseudospectral evaluation of the quadratic convection and degree-r
/// absorption terms on one collocation grid, plus their linearizations.
/// Holds scratch space: one instance per thread.
class NonlinearTerms {
 public:
  NonlinearTerms(Shape shape, double r, int points);
  /// Grid chosen by the dealiasing rule for max(2, r).
  NonlinearTerms(Shape shape, double r);

  const Shape& shape() const { return shape_; }
  double r() const { return r_; }
  int points() const { return transform_->points(); }
  GridTransform& transform() { return *transform_; }

  /// P[(u.grad) v]
  SpectralField convection(const SpectralField& u, const SpectralField& v);
  /// P(|u|^(r-1) u)
  SpectralField absorption(const SpectralField& u);
  /// out = -gamma B(u) - beta C(u)
  void evaluate(const SpectralField& u, double beta, SpectralField& out,
                double gamma = 1.0);
  /// Tangent of -gamma B - beta C at u applied to v.
  void tangent(const SpectralField& u, const SpectralField& v, double beta,
               SpectralField& out, double gamma = 1.0);
  /// H-adjoint of the tangent at u applied to lambda.
  void adjoint(const SpectralField& u, const SpectralField& lambda, double beta,
               SpectralField& out, double gamma = 1.0);

  /// Grid quadrature of a nodal scalar on this grid.
  double integrate(std::span<const double> scalar) const;
  /// Nodal values of u (d components) into a scratch owned by the caller.
  void values(const SpectralField& u, std::vector<double>& out);
  void gradients(const SpectralField& u, std::vector<double>& out);

 private:
  Shape shape_;
  double r_;
  GridTransform* transform_;
  std::size_t nodes_;
  std::vector<double> u_, grad_, v_, grad_v_, work_;
};

/// Per-thread cached evaluator.
NonlinearTerms& nonlinear_terms_for(Shape shape, double r);

SpectralField apply_stokes(const SpectralField& u);
SpectralField apply_convection(const SpectralField& u, const SpectralField& v);
SpectralField apply_absorption(const SpectralField& u, double r);

/// -mu A u - B(u) - alpha u - beta C(u) + f(t)
SpectralField drift(const SpectralField& u, double t,
                    const PhysicalParams& params, const ForcingSpec& forcing);

/// Lower-bound defect of the local monotonicity estimate; >= 0 up to
/// round-off. Throws DomainError outside r > 3 or r = 3 with 2 beta mu >= 1.
double monotonicity_defect(const SpectralField& u, const SpectralField& v,
                           const PhysicalParams& params);

/// (C(u), Au) - || |u|^((r-1)/2) grad u ||^2
///   - 4 (r-1)/(r+1)^2 || grad |u|^((r+1)/2) ||^2 on an M-point grid
/// (dealiasing rule when points == 0).
double torus_identity_residual(const SpectralField& u, double r, int points = 0);

/// Tolerance scale (1 + ||u||_V + ||v||_V)^(r+1).
double tolerance_scale(const SpectralField& u, const SpectralField& v, double r);

/// Grid quadrature of |w|^(p-2) |z|^2 style weights used by the estimates.
struct WeightedNorms {
  double u_weighted_diff;  // || |u|^((r-1)/2) (u-v) ||^2
  double v_weighted_diff;  // || |v|^((r-1)/2) (u-v) ||^2
  double lr1_diff;         // ||u-v||_{L^{r+1}}^{r+1}
};
WeightedNorms weighted_norms(const SpectralField& u, const SpectralField& v,
                             double r);

}  // namespace cbf
