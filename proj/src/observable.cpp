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

#include "cbf/observable.hpp"

#include <cmath>
#include <limits>

namespace cbf {

Observable Observable::bounded_tanh(SpectralField phi, double cap) {
  if (!(cap > 0.0)) throw DomainError("tanh observable needs a positive cap");
  Observable g;
  g.kind_ = Kind::BoundedTanh;
  g.field_ = project_leray(phi);
  g.cap_ = cap;
  return g;
}

Observable Observable::saturating_distance(SpectralField center, double cap) {
  if (!(cap > 0.0)) throw DomainError("distance observable needs a positive cap");
  Observable g;
  g.kind_ = Kind::SaturatingDistance;
  g.field_ = project_leray(center);
  g.cap_ = cap;
  return g;
}

Observable Observable::linear(SpectralField phi) {
  Observable g;
  g.kind_ = Kind::Linear;
  g.field_ = project_leray(phi);
  return g;
}

Observable Observable::constant(double c) {
  Observable g;
  g.kind_ = Kind::Constant;
  g.cap_ = c;
  return g;
}

std::string Observable::id() const {
  switch (kind_) {
    case Kind::BoundedTanh: return "tanh";
    case Kind::SaturatingDistance: return "saturating-distance";
    case Kind::Linear: return "linear";
    case Kind::Constant: return "constant";
  }
  return "unknown";
}

double Observable::value(const SpectralField& y) const {
  switch (kind_) {
    case Kind::BoundedTanh: return cap_ * std::tanh(inner(field_, y) / cap_);
    case Kind::SaturatingDistance: {
      const SpectralField diff = y - field_;
      return cap_ * std::min(1.0, inner(diff, diff));
    }
    case Kind::Linear: return inner(field_, y);
    case Kind::Constant: return cap_;
  }
  return 0.0;
}

SpectralField Observable::gradient(const SpectralField& y) const {
  switch (kind_) {
    case Kind::BoundedTanh: {
      const double c = std::cosh(inner(field_, y) / cap_);
      return (1.0 / (c * c)) * field_;
    }
    case Kind::SaturatingDistance: {
      SpectralField diff = project_leray(y - field_);
      const double d2 = inner(diff, diff);
      if (d2 == 1.0) throw DomainError("distance observable is not differentiable here");
      if (d2 > 1.0) diff.set_zero();
      else diff *= 2.0 * cap_;
      return diff;
    }
    case Kind::Linear: return field_;
    case Kind::Constant: return SpectralField(y.shape());
  }
  return SpectralField(y.shape());
}

double Observable::sup_norm() const {
  switch (kind_) {
    case Kind::BoundedTanh:
    case Kind::SaturatingDistance: return cap_;
    case Kind::Linear: return std::numeric_limits<double>::infinity();
    case Kind::Constant: return std::abs(cap_);
  }
  return 0.0;
}

double Observable::lipschitz() const {
  switch (kind_) {
    case Kind::BoundedTanh:
    case Kind::Linear: return norm_h(field_);
    case Kind::SaturatingDistance: return 2.0 * cap_;
    case Kind::Constant: return 0.0;
  }
  return 0.0;
}

}  // namespace cbf
