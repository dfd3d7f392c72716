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

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "cbf/field.hpp"

namespace cbf {

/// Collocation values on the uniform grid x_j = 2 pi j / M, layout
/// [component][node] with nodes in lexicographic order (axis 1 slowest).
struct PhysicalGrid {
  int dim = 2;
  int points = 0;  // M per axis
  std::vector<double> values;

  PhysicalGrid() = default;
  PhysicalGrid(int dim_, int points_);

  std::size_t node_count() const;
  std::span<double> component(int c);
  std::span<const double> component(int c) const;
  /// Grid quadrature of a nodal scalar: (2pi/M)^d sum_j s_j.
  double integrate(std::span<const double> scalar) const;
};

/// Smallest M of the form 2^a 3^b 5^c that is >= n.
int fft_friendly_size(int n);

/// Grid size that represents a degree-p product of box-limited fields
/// without aliasing onto the retained box: M > (p+1) N/2. Degrees above 5
/// are clamped (controlled aliasing) and degrees below 2 raised to 2.
int dealiased_points(int n, double degree);

/// FFT-backed spectral <-> physical maps for one (shape, M). Holds scratch
/// buffers, so each thread needs its own instance; see transform_for().
class GridTransform {
 public:
  GridTransform(Shape shape, int points);
  ~GridTransform();
  GridTransform(const GridTransform&) = delete;
  GridTransform& operator=(const GridTransform&) = delete;

  const Shape& shape() const { return shape_; }
  int points() const { return points_; }
  std::size_t node_count() const { return nodes_; }

  PhysicalGrid to_physical(const SpectralField& u);
  SpectralField to_spectral(const PhysicalGrid& grid);

  /// Synthesizes two scalar spectral arrays (stride `stride`, offsets a, b)
  /// onto the grid. b may be negative to synthesize a single array.
  void synthesize(std::span<const Complex> coeffs, int stride, int comp_a,
                  int comp_b, double* out_a, double* out_b);
  /// Same, but synthesizes i k_axis c_k (a spatial derivative).
  void synthesize_derivative(std::span<const Complex> coeffs, int stride,
                             int comp_a, int comp_b, int axis, double* out_a,
                             double* out_b);
  /// Analyzes one or two real nodal arrays into strided spectral slots,
  /// overwriting them; truncates to the box and enforces exact reality.
  void analyze(const double* in_a, const double* in_b,
               std::span<Complex> coeffs, int stride, int comp_a, int comp_b);

  /// All d components of u, and all d x d derivatives du_i/dx_j stored at
  /// grad[(i*d + j) * nodes].
  void field_to_grid(const SpectralField& u, std::span<double> values);
  void gradient_to_grid(const SpectralField& u, std::span<double> grad);
  void grid_to_field(std::span<const double> values, SpectralField& out);

 private:
  void scatter(std::span<const Complex> coeffs, int stride, int comp_a,
               int comp_b, int derivative_axis);
  void gather_pair(double* out_a, double* out_b);

  Shape shape_;
  const ModeTable* modes_;
  int points_;
  std::size_t nodes_;
  std::vector<std::size_t> slot_;  // buffer index of each box mode
  Complex* buffer_;
  void* forward_;
  void* backward_;
};

/// Per-thread cached transform for (shape, M).
GridTransform& transform_for(Shape shape, int points);

PhysicalGrid to_physical(const SpectralField& u, int points);
SpectralField to_spectral(const PhysicalGrid& grid, Shape shape);

enum class Direction { ToPhysical, ToSpectral };

namespace reference {

// Serial brute-force evaluations kept as oracles for the FFT path.
PhysicalGrid to_physical_direct(const SpectralField& u, int points);
SpectralField to_spectral_direct(const PhysicalGrid& grid, Shape shape);

}  // namespace reference

}  // namespace cbf
