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

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbf {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched shapes, grids or inconsistent settings.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Arguments outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or runaway state during time integration.
class NumericalBlowup : public Error {
 public:
  NumericalBlowup(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

using Complex = std::complex<double>;
using WaveVector = std::array<int, 3>;

/// Spatial dimension and spectral resolution N. Retained modes are the box
/// |k_i| <= N/2, so each axis carries N+1 wavenumbers.
struct Shape {
  int dim = 2;
  int n = 16;

  int half() const { return n / 2; }
  int modes_per_axis() const { return n + 1; }
  std::size_t mode_count() const;
  bool operator==(const Shape&) const = default;
};

/// Throws ConfigurationError unless dim in {2,3}, N even and positive, and
/// N <= 8 when dim == 3.
void validate(const Shape& shape);

/// Wave vectors of the retained box in lexicographic order (k_1 slowest).
/// Index of -k is mode_count()-1-index(k); the zero mode sits in the middle.
class ModeTable {
 public:
  explicit ModeTable(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return k_.size(); }
  const WaveVector& k(std::size_t m) const { return k_[m]; }
  double k2(std::size_t m) const { return k2_[m]; }
  std::size_t conjugate(std::size_t m) const { return k_.size() - 1 - m; }
  std::size_t zero_index() const { return (k_.size() - 1) / 2; }
  std::size_t index_of(const WaveVector& k) const;

  /// Shared immutable table for a shape; the pointer stays valid forever.
  static const ModeTable* get(Shape shape);

 private:
  Shape shape_;
  std::vector<WaveVector> k_;
  std::vector<double> k2_;
};

/// Real periodic vector field on [0,2pi)^d stored by its truncated Fourier
/// coefficients u(x) = sum_k c_k exp(i k.x), layout [mode][component].
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(Shape shape);

  const Shape& shape() const { return modes_->shape(); }
  int dim() const { return modes_->shape().dim; }
  int resolution() const { return modes_->shape().n; }
  const ModeTable& modes() const { return *modes_; }
  std::size_t mode_count() const { return modes_->size(); }
  bool empty() const { return modes_ == nullptr; }

  Complex& at(std::size_t mode, int comp) {
    return coeffs_[mode * static_cast<std::size_t>(dim()) + comp];
  }
  const Complex& at(std::size_t mode, int comp) const {
    return coeffs_[mode * static_cast<std::size_t>(dim()) + comp];
  }
  Complex& at(const WaveVector& k, int comp) {
    return at(modes_->index_of(k), comp);
  }
  const Complex& at(const WaveVector& k, int comp) const {
    return at(modes_->index_of(k), comp);
  }

  std::span<Complex> coeffs() { return coeffs_; }
  std::span<const Complex> coeffs() const { return coeffs_; }

  /// Sets c_k and its conjugate partner c_{-k} = conj(c_k).
  void set_mode(const WaveVector& k, std::span<const Complex> value);

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);
  /// this += a * x
  SpectralField& axpy(double a, const SpectralField& x);
  void set_zero();

  bool same_shape(const SpectralField& other) const {
    return modes_ == other.modes_;
  }
  /// Largest |c_{-k} - conj(c_k)|.
  double reality_defect() const;
  /// Largest |k . c_k| over k != 0.
  double divergence_defect() const;
  double max_abs() const;
  double max_abs_diff(const SpectralField& other) const;
  bool all_finite() const;

 private:
  const ModeTable* modes_ = nullptr;
  std::vector<Complex> coeffs_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

/// Throws ConfigurationError when the shapes differ.
void require_same_shape(const SpectralField& a, const SpectralField& b,
                        const char* where);

/// L^2 inner product on the torus, (u,v) = (2pi)^d sum_k Re(c_k . conj(d_k)).
double inner(const SpectralField& u, const SpectralField& v);

enum class NormKind { H, Grad, V, Lp };

double norm_h(const SpectralField& u);
double norm_grad(const SpectralField& u);
double norm_v(const SpectralField& u);
/// L^p norm by quadrature on a dealiased grid; throws DomainError for p < 1.
double norm_lp(const SpectralField& u, double p);
double norm(const SpectralField& u, NormKind kind, double p = 2.0);

/// Leray-Helmholtz projection: c_k -> c_k - k (k.c_k)/|k|^2, zero mode kept.
SpectralField project_leray(const SpectralField& u);
void project_leray_inplace(SpectralField& u);

/// Random solenoidal field with E|c_k| proportional to
/// amplitude (1+|k|^2)^(-s/2). Deterministic in seed.
SpectralField random_divergence_free(std::uint64_t seed, double decay,
                                     double amplitude, Shape shape);

/// One real orthonormal (in H) basis direction of the truncated solenoidal
/// space. For k != 0 the pair (k,-k) carries 2(d-1) directions.
struct BasisDirection {
  std::size_t mode;       // representative mode (index < conjugate)
  std::array<double, 3> polarization;
  bool imaginary;         // selects the sin part of the pair
};

/// Enumerates the real orthonormal solenoidal basis, zero-mode first.
std::vector<BasisDirection> solenoidal_basis(Shape shape);

/// Unit polarization vectors orthogonal to k (d-1 of them, d for k = 0).
std::vector<std::array<double, 3>> polarizations(const WaveVector& k, int dim);

// Snapshot I/O: int32 dim, int32 N, then (re, im) float64 pairs per mode and
// component in lexicographic k order, all little-endian.
void write_snapshot(const std::string& path, const SpectralField& u);
SpectralField read_snapshot(const std::string& path);
std::vector<std::uint8_t> encode_snapshot(const SpectralField& u);
SpectralField decode_snapshot(std::span<const std::uint8_t> bytes);
std::string snapshot_json(const SpectralField& u);
SpectralField snapshot_from_json(const std::string& text);

}  // namespace cbf
