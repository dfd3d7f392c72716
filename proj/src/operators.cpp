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

#include "cbf/operators.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <tuple>

namespace cbf {

void PhysicalParams::validate(int dim) const {
  if (!(r >= 1.0)) throw DomainError("absorption exponent must satisfy r >= 1");
  if (!convection && !test_mode)
    throw DomainError("convection can only be disabled in test mode");
  if (test_mode) {
    if (!(mu >= 0.0 && alpha >= 0.0 && beta >= 0.0))
      throw DomainError("coefficients must be nonnegative");
    return;
  }
  if (!(mu > 0.0 && alpha > 0.0 && beta > 0.0))
    throw DomainError("mu, alpha and beta must be positive");
  const bool critical_ok = r == 3.0 && 2.0 * beta * mu >= 1.0;
  if (!(r > 3.0 || critical_ok))
    throw DomainError("need r > 3, or r = 3 with 2 beta mu >= 1");
  if (dim == 3 && r > 5.0)
    throw DomainError("three-dimensional runs need r in (3,5] or r = 3");
}

namespace {

double rho_form(double mu, double beta, double r, double numerator) {
  if (r < 3.0) throw DomainError("rho is defined for r >= 3");
  const double bracket = numerator / (beta * mu * (r - 1.0));
  if (r == 3.0)
    return bracket <= 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (r - 3.0) / (2.0 * mu * (r - 1.0)) * std::pow(bracket, 2.0 / (r - 3.0));
}

// |u|^(r-1) from |u|^2, with the common exponents special-cased.
inline double magnitude_power(double mag2, double exponent) {
  if (exponent == 2.0) return mag2;
  if (exponent == 3.0) return mag2 * std::sqrt(mag2);
  if (exponent == 4.0) return mag2 * mag2;
  if (exponent == 0.0) return 1.0;
  if (exponent == 1.0) return std::sqrt(mag2);
  if (mag2 == 0.0) return 0.0;
  return std::pow(mag2, 0.5 * exponent);
}

}  // namespace

double PhysicalParams::rho() const { return rho_form(mu, beta, r, 4.0); }
double PhysicalParams::rho_star() const { return rho_form(mu, beta, r, 1.0); }

ForcingSpec ForcingSpec::zero() { return ForcingSpec{}; }

ForcingSpec ForcingSpec::constant(SpectralField field) {
  ForcingSpec f;
  f.kind_ = Kind::Constant;
  f.field_ = project_leray(field);
  return f;
}

ForcingSpec ForcingSpec::single_mode(SpectralField field, double omega) {
  ForcingSpec f;
  f.kind_ = Kind::SingleMode;
  f.field_ = project_leray(field);
  f.omega_ = omega;
  return f;
}

void ForcingSpec::add_to(double t, SpectralField& out) const {
  switch (kind_) {
    case Kind::Zero: return;
    case Kind::Constant: out += field_; return;
    case Kind::SingleMode: out.axpy(std::cos(omega_ * t), field_); return;
  }
}

SpectralField ForcingSpec::value(double t, Shape shape) const {
  SpectralField out(shape);
  add_to(t, out);
  return out;
}

double ForcingSpec::v_bound() const {
  return kind_ == Kind::Zero ? 0.0 : norm_v(field_);
}

NonlinearTerms::NonlinearTerms(Shape shape, double r, int points)
    : shape_(shape), r_(r), transform_(&transform_for(shape, points)),
      nodes_(transform_->node_count()) {
  const std::size_t d = shape.dim;
  u_.resize(d * nodes_);
  grad_.resize(d * d * nodes_);
  v_.resize(d * nodes_);
  grad_v_.resize(d * d * nodes_);
  work_.resize(d * nodes_);
}

NonlinearTerms::NonlinearTerms(Shape shape, double r)
    : NonlinearTerms(shape, r, dealiased_points(shape.n, std::max(2.0, r))) {}

double NonlinearTerms::integrate(std::span<const double> scalar) const {
  double sum = 0.0;
  for (double s : scalar) sum += s;
  return sum * std::pow(kTwoPi / points(), shape_.dim);
}

void NonlinearTerms::values(const SpectralField& u, std::vector<double>& out) {
  out.resize(shape_.dim * nodes_);
  transform_->field_to_grid(u, out);
}

void NonlinearTerms::gradients(const SpectralField& u, std::vector<double>& out) {
  out.resize(shape_.dim * shape_.dim * nodes_);
  transform_->gradient_to_grid(u, out);
}

SpectralField NonlinearTerms::convection(const SpectralField& u,
                                         const SpectralField& v) {
  require_same_shape(u, v, "convection");
  if (u.shape() != shape_) throw ConfigurationError("convection: resolution mismatch");
  const int d = shape_.dim;
  transform_->field_to_grid(u, u_);
  transform_->gradient_to_grid(v, grad_v_);
  for (int i = 0; i < d; ++i)
    for (std::size_t x = 0; x < nodes_; ++x) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += u_[j * nodes_ + x] * grad_v_[(i * d + j) * nodes_ + x];
      work_[i * nodes_ + x] = s;
    }
  SpectralField out(shape_);
  transform_->grid_to_field(work_, out);
  project_leray_inplace(out);
  return out;
}

SpectralField NonlinearTerms::absorption(const SpectralField& u) {
  if (u.shape() != shape_) throw ConfigurationError("absorption: resolution mismatch");
  const int d = shape_.dim;
  transform_->field_to_grid(u, u_);
  for (std::size_t x = 0; x < nodes_; ++x) {
    double mag2 = 0.0;
    for (int c = 0; c < d; ++c) mag2 += u_[c * nodes_ + x] * u_[c * nodes_ + x];
    const double w = magnitude_power(mag2, r_ - 1.0);
    for (int c = 0; c < d; ++c) work_[c * nodes_ + x] = w * u_[c * nodes_ + x];
  }
  SpectralField out(shape_);
  transform_->grid_to_field(work_, out);
  project_leray_inplace(out);
  return out;
}

void NonlinearTerms::evaluate(const SpectralField& u, double beta,
                              SpectralField& out, double gamma) {
  if (u.shape() != shape_) throw ConfigurationError("evaluate: resolution mismatch");
  if (out.empty() || out.shape() != shape_) out = SpectralField(shape_);
  if (beta == 0.0 && gamma == 0.0) {
    out.set_zero();
    return;
  }
  const int d = shape_.dim;
  transform_->field_to_grid(u, u_);
  transform_->gradient_to_grid(u, grad_);
  const double exponent = r_ - 1.0;
  for (std::size_t x = 0; x < nodes_; ++x) {
    double ux[3] = {0.0, 0.0, 0.0};
    double mag2 = 0.0;
    for (int c = 0; c < d; ++c) {
      ux[c] = u_[c * nodes_ + x];
      mag2 += ux[c] * ux[c];
    }
    const double w = beta != 0.0 ? beta * magnitude_power(mag2, exponent) : 0.0;
    for (int i = 0; i < d; ++i) {
      double conv = 0.0;
      for (int j = 0; j < d; ++j) conv += ux[j] * grad_[(i * d + j) * nodes_ + x];
      work_[i * nodes_ + x] = -gamma * conv - w * ux[i];
    }
  }
  transform_->grid_to_field(work_, out);
  project_leray_inplace(out);
}

void NonlinearTerms::tangent(const SpectralField& u, const SpectralField& v,
                             double beta, SpectralField& out, double gamma) {
  if (r_ < 3.0) throw DomainError("linearized absorption needs r >= 3");
  if (out.empty() || out.shape() != shape_) out = SpectralField(shape_);
  if (beta == 0.0 && gamma == 0.0) {
    out.set_zero();
    return;
  }
  const int d = shape_.dim;
  transform_->field_to_grid(u, u_);
  transform_->gradient_to_grid(u, grad_);
  transform_->field_to_grid(v, v_);
  transform_->gradient_to_grid(v, grad_v_);
  for (std::size_t x = 0; x < nodes_; ++x) {
    double ux[3] = {0.0, 0.0, 0.0}, vx[3] = {0.0, 0.0, 0.0};
    double mag2 = 0.0, dot = 0.0;
    for (int c = 0; c < d; ++c) {
      ux[c] = u_[c * nodes_ + x];
      vx[c] = v_[c * nodes_ + x];
      mag2 += ux[c] * ux[c];
      dot += ux[c] * vx[c];
    }
    const double w1 = beta * magnitude_power(mag2, r_ - 1.0);
    const double w2 = beta * (r_ - 1.0) * magnitude_power(mag2, r_ - 3.0) * dot;
    for (int i = 0; i < d; ++i) {
      double conv = 0.0;
      for (int j = 0; j < d; ++j)
        conv += vx[j] * grad_[(i * d + j) * nodes_ + x] +
                ux[j] * grad_v_[(i * d + j) * nodes_ + x];
      work_[i * nodes_ + x] = -gamma * conv - w1 * vx[i] - w2 * ux[i];
    }
  }
  transform_->grid_to_field(work_, out);
  project_leray_inplace(out);
}

void NonlinearTerms::adjoint(const SpectralField& u, const SpectralField& lambda,
                             double beta, SpectralField& out, double gamma) {
  if (r_ < 3.0) throw DomainError("linearized absorption needs r >= 3");
  if (out.empty() || out.shape() != shape_) out = SpectralField(shape_);
  if (beta == 0.0 && gamma == 0.0) {
    out.set_zero();
    return;
  }
  const int d = shape_.dim;
  transform_->field_to_grid(u, u_);
  transform_->gradient_to_grid(u, grad_);
  transform_->field_to_grid(lambda, v_);
  transform_->gradient_to_grid(lambda, grad_v_);
  for (std::size_t x = 0; x < nodes_; ++x) {
    double ux[3] = {0.0, 0.0, 0.0}, lx[3] = {0.0, 0.0, 0.0};
    double mag2 = 0.0, dot = 0.0;
    for (int c = 0; c < d; ++c) {
      ux[c] = u_[c * nodes_ + x];
      lx[c] = v_[c * nodes_ + x];
      mag2 += ux[c] * ux[c];
      dot += ux[c] * lx[c];
    }
    const double w1 = beta * magnitude_power(mag2, r_ - 1.0);
    const double w2 = beta * (r_ - 1.0) * magnitude_power(mag2, r_ - 3.0) * dot;
    for (int i = 0; i < d; ++i) {
      // (grad u)^T lambda - (u.grad) lambda
      double conv = 0.0;
      for (int j = 0; j < d; ++j)
        conv += lx[j] * grad_[(j * d + i) * nodes_ + x] -
                ux[j] * grad_v_[(i * d + j) * nodes_ + x];
      work_[i * nodes_ + x] = -gamma * conv - w1 * lx[i] - w2 * ux[i];
    }
  }
  transform_->grid_to_field(work_, out);
  project_leray_inplace(out);
}

NonlinearTerms& nonlinear_terms_for(Shape shape, double r) {
  thread_local std::map<std::tuple<int, int, double>, std::unique_ptr<NonlinearTerms>> cache;
  auto& slot = cache[{shape.dim, shape.n, r}];
  if (!slot) slot = std::make_unique<NonlinearTerms>(shape, r);
  return *slot;
}

SpectralField apply_stokes(const SpectralField& u) {
  SpectralField out = u;
  const auto& modes = u.modes();
  for (std::size_t m = 0; m < modes.size(); ++m)
    for (int c = 0; c < u.dim(); ++c) out.at(m, c) *= modes.k2(m);
  return out;
}

SpectralField apply_convection(const SpectralField& u, const SpectralField& v) {
  require_same_shape(u, v, "apply_convection");
  return nonlinear_terms_for(u.shape(), 2.0).convection(u, v);
}

SpectralField apply_absorption(const SpectralField& u, double r) {
  if (!(r >= 1.0)) throw DomainError("absorption exponent must satisfy r >= 1");
  return nonlinear_terms_for(u.shape(), r).absorption(u);
}

SpectralField drift(const SpectralField& u, double t, const PhysicalParams& params,
                    const ForcingSpec& forcing) {
  params.validate(u.dim());
  SpectralField out(u.shape());
  nonlinear_terms_for(u.shape(), params.r)
      .evaluate(u, params.beta, out, params.convection_factor());
  const auto& modes = u.modes();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double damping = params.mu * modes.k2(m) + params.alpha;
    for (int c = 0; c < u.dim(); ++c) out.at(m, c) -= damping * u.at(m, c);
  }
  forcing.add_to(t, out);
  return out;
}

WeightedNorms weighted_norms(const SpectralField& u, const SpectralField& v,
                             double r) {
  require_same_shape(u, v, "weighted_norms");
  auto& nt = nonlinear_terms_for(u.shape(), r);
  std::vector<double> gu, gv;
  nt.values(u, gu);
  nt.values(v, gv);
  const int d = u.dim();
  const std::size_t nodes = gu.size() / d;
  std::vector<double> a(nodes), b(nodes), c(nodes);
  for (std::size_t x = 0; x < nodes; ++x) {
    double mu2 = 0.0, mv2 = 0.0, mw2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double uk = gu[k * nodes + x], vk = gv[k * nodes + x];
      mu2 += uk * uk;
      mv2 += vk * vk;
      mw2 += (uk - vk) * (uk - vk);
    }
    a[x] = magnitude_power(mu2, r - 1.0) * mw2;
    b[x] = magnitude_power(mv2, r - 1.0) * mw2;
    c[x] = magnitude_power(mw2, r + 1.0);
  }
  return {nt.integrate(a), nt.integrate(b), nt.integrate(c)};
}

double monotonicity_defect(const SpectralField& u, const SpectralField& v,
                           const PhysicalParams& params) {
  require_same_shape(u, v, "monotonicity_defect");
  const double r = params.r;
  const bool critical = r == 3.0 && 2.0 * params.beta * params.mu >= 1.0;
  if (!(r > 3.0 || critical))
    throw DomainError("monotonicity estimate needs r > 3, or r = 3 with 2 beta mu >= 1");
  auto& nt = nonlinear_terms_for(u.shape(), r);
  SpectralField nu(u.shape()), nv(u.shape());
  nt.evaluate(u, params.beta, nu);
  nt.evaluate(v, params.beta, nv);
  const SpectralField w = u - v;
  const double grad2 = std::pow(norm_grad(w), 2);
  // <mu A w + B(u) - B(v) + beta (C(u) - C(v)), w>
  const double pairing = params.mu * grad2 - inner(nu - nv, w);
  const auto weights = weighted_norms(u, v, r);
  if (r > 3.0)
    return pairing + params.rho() * inner(w, w) - 0.5 * weights.u_weighted_diff -
           0.5 * params.mu * grad2;
  return pairing - 0.5 * (params.beta - 1.0 / (2.0 * params.mu)) * weights.v_weighted_diff;
}

double torus_identity_residual(const SpectralField& u, double r, int points) {
  if (!(r >= 1.0)) throw DomainError("absorption exponent must satisfy r >= 1");
  const int m = points > 0 ? points : dealiased_points(u.resolution(), r);
  auto& transform = transform_for(u.shape(), m);
  const int d = u.dim();
  const std::size_t nodes = transform.node_count();
  std::vector<double> values(d * nodes), grad(d * d * nodes), stokes(d * nodes);
  transform.field_to_grid(u, values);
  transform.gradient_to_grid(u, grad);
  transform.field_to_grid(apply_stokes(u), stokes);
  std::vector<double> lhs(nodes), first(nodes), second(nodes);
  for (std::size_t x = 0; x < nodes; ++x) {
    double mag2 = 0.0, pair = 0.0, grad2 = 0.0;
    for (int c = 0; c < d; ++c) {
      mag2 += values[c * nodes + x] * values[c * nodes + x];
      pair += values[c * nodes + x] * stokes[c * nodes + x];
    }
    double chain2 = 0.0;  // |(grad u)^T u|^2
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) {
        const double g = grad[(i * d + j) * nodes + x];
        s += values[i * nodes + x] * g;
        grad2 += g * g;
      }
      chain2 += s * s;
    }
    const double power = magnitude_power(mag2, r - 1.0);
    lhs[x] = power * pair;
    first[x] = power * grad2;
    second[x] = mag2 == 0.0 ? 0.0 : (r - 1.0) * magnitude_power(mag2, r - 3.0) * chain2;
  }
  const PhysicalGrid grid(d, m);
  return grid.integrate(lhs) - grid.integrate(first) - grid.integrate(second);
}

double tolerance_scale(const SpectralField& u, const SpectralField& v, double r) {
  return std::pow(1.0 + norm_v(u) + norm_v(v), r + 1.0);
}

}  // namespace cbf
