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

#include <string>

#include "cbf/field.hpp"

namespace cbf {

/// Terminal functionals g: H -> R from a fixed catalog.
class Observable {
 public:
  enum class Kind { BoundedTanh, SaturatingDistance, Linear, Constant };

  /// cap * tanh((phi, y) / cap)
  static Observable bounded_tanh(SpectralField phi, double cap);
  /// cap * min(1, ||y - center||^2)
  static Observable saturating_distance(SpectralField center, double cap);
  /// (phi, y). Unbounded: only for closed-form checks.
  static Observable linear(SpectralField phi);
  static Observable constant(double c);

  Kind kind() const { return kind_; }
  std::string id() const;
  bool bounded() const { return kind_ != Kind::Linear; }
  bool oracle_only() const { return kind_ == Kind::Linear; }

  double value(const SpectralField& y) const;
  /// H-gradient (a solenoidal field). Throws DomainError exactly on the
  /// saturation sphere of the distance entry, where g has a kink.
  SpectralField gradient(const SpectralField& y) const;
  /// sup |g|; +inf for the linear entry.
  double sup_norm() const;
  double lipschitz() const;

  const SpectralField& field() const { return field_; }
  double cap() const { return cap_; }

 private:
  Kind kind_ = Kind::Constant;
  SpectralField field_;
  double cap_ = 0.0;
};

}  // namespace cbf
