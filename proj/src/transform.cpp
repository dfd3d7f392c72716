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

#include "cbf/transform.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

namespace cbf {

namespace {

// The FFTW planner is not re-entrant; execution with private buffers is.
std::mutex& planner_mutex() {
  static std::mutex mutex;
  return mutex;
}

std::size_t ipow(int base, int exp) {
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) out *= static_cast<std::size_t>(base);
  return out;
}

}  // namespace

PhysicalGrid::PhysicalGrid(int dim_, int points_)
    : dim(dim_), points(points_), values(ipow(points_, dim_) * dim_) {}

std::size_t PhysicalGrid::node_count() const { return ipow(points, dim); }

std::span<double> PhysicalGrid::component(int c) {
  const std::size_t n = node_count();
  return std::span<double>(values).subspan(c * n, n);
}

std::span<const double> PhysicalGrid::component(int c) const {
  const std::size_t n = node_count();
  return std::span<const double>(values).subspan(c * n, n);
}

double PhysicalGrid::integrate(std::span<const double> scalar) const {
  double sum = 0.0;
  for (double s : scalar) sum += s;
  return sum * std::pow(kTwoPi / points, dim);
}

int fft_friendly_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int rest = m;
    for (int f : {2, 3, 5})
      while (rest % f == 0) rest /= f;
    if (rest == 1) return m;
  }
}

int dealiased_points(int n, double degree) {
  const double p = std::clamp(degree, 2.0, 5.0);
  const int minimum = static_cast<int>(std::floor((p + 1.0) * n / 2.0)) + 1;
  return fft_friendly_size(minimum);
}

GridTransform::GridTransform(Shape shape, int points)
    : shape_(shape), modes_(ModeTable::get(shape)), points_(points),
      nodes_(ipow(points, shape.dim)) {
  if (points < shape.n + 1)
    throw ConfigurationError("grid has fewer points than retained modes");
  slot_.resize(modes_->size());
  for (std::size_t m = 0; m < modes_->size(); ++m) {
    const auto& k = modes_->k(m);
    std::size_t index = 0;
    for (int axis = 0; axis < shape.dim; ++axis)
      index = index * points + static_cast<std::size_t>((k[axis] + points) % points);
    slot_[m] = index;
  }
  buffer_ = reinterpret_cast<Complex*>(fftw_alloc_complex(nodes_));
  int dims[3] = {points, points, points};
  std::lock_guard lock(planner_mutex());
  auto* raw = reinterpret_cast<fftw_complex*>(buffer_);
  forward_ = fftw_plan_dft(shape.dim, dims, raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
  backward_ = fftw_plan_dft(shape.dim, dims, raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE);
}

GridTransform::~GridTransform() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  fftw_destroy_plan(static_cast<fftw_plan>(backward_));
  fftw_free(buffer_);
}

void GridTransform::scatter(std::span<const Complex> coeffs, int stride,
                            int comp_a, int comp_b, int derivative_axis) {
  std::fill(buffer_, buffer_ + nodes_, Complex{});
  const Complex i_unit(0.0, 1.0);
  for (std::size_t m = 0; m < slot_.size(); ++m) {
    Complex value = coeffs[m * stride + comp_a];
    if (comp_b >= 0) value += i_unit * coeffs[m * stride + comp_b];
    if (derivative_axis >= 0)
      value *= Complex(0.0, static_cast<double>(modes_->k(m)[derivative_axis]));
    buffer_[slot_[m]] = value;
  }
  auto* raw = reinterpret_cast<fftw_complex*>(buffer_);
  fftw_execute_dft(static_cast<fftw_plan>(backward_), raw, raw);
}

void GridTransform::gather_pair(double* out_a, double* out_b) {
  for (std::size_t j = 0; j < nodes_; ++j) {
    out_a[j] = buffer_[j].real();
    if (out_b) out_b[j] = buffer_[j].imag();
  }
}

void GridTransform::synthesize(std::span<const Complex> coeffs, int stride,
                               int comp_a, int comp_b, double* out_a,
                               double* out_b) {
  scatter(coeffs, stride, comp_a, comp_b, -1);
  gather_pair(out_a, comp_b >= 0 ? out_b : nullptr);
}

void GridTransform::synthesize_derivative(std::span<const Complex> coeffs,
                                          int stride, int comp_a, int comp_b,
                                          int axis, double* out_a,
                                          double* out_b) {
  scatter(coeffs, stride, comp_a, comp_b, axis);
  gather_pair(out_a, comp_b >= 0 ? out_b : nullptr);
}

void GridTransform::analyze(const double* in_a, const double* in_b,
                            std::span<Complex> coeffs, int stride, int comp_a,
                            int comp_b) {
  for (std::size_t j = 0; j < nodes_; ++j)
    buffer_[j] = Complex(in_a[j], in_b ? in_b[j] : 0.0);
  auto* raw = reinterpret_cast<fftw_complex*>(buffer_);
  fftw_execute_dft(static_cast<fftw_plan>(forward_), raw, raw);
  const double scale = 1.0 / static_cast<double>(nodes_);
  for (std::size_t m = 0; m < slot_.size(); ++m) {
    const Complex x = buffer_[slot_[m]] * scale;
    const Complex xc = std::conj(buffer_[slot_[modes_->conjugate(m)]] * scale);
    coeffs[m * stride + comp_a] = 0.5 * (x + xc);
    if (in_b && comp_b >= 0)
      coeffs[m * stride + comp_b] = Complex(0.0, -0.5) * (x - xc);
  }
}

void GridTransform::field_to_grid(const SpectralField& u,
                                  std::span<double> values) {
  const int d = shape_.dim;
  const auto c = u.coeffs();
  synthesize(c, d, 0, 1, values.data(), values.data() + nodes_);
  if (d == 3) synthesize(c, d, 2, -1, values.data() + 2 * nodes_, nullptr);
}

void GridTransform::gradient_to_grid(const SpectralField& u,
                                     std::span<double> grad) {
  const int d = shape_.dim;
  const auto c = u.coeffs();
  for (int axis = 0; axis < d; ++axis) {
    synthesize_derivative(c, d, 0, 1, axis, grad.data() + (0 * d + axis) * nodes_,
                          grad.data() + (1 * d + axis) * nodes_);
    if (d == 3)
      synthesize_derivative(c, d, 2, -1, axis,
                            grad.data() + (2 * d + axis) * nodes_, nullptr);
  }
}

void GridTransform::grid_to_field(std::span<const double> values,
                                  SpectralField& out) {
  const int d = shape_.dim;
  auto c = out.coeffs();
  analyze(values.data(), values.data() + nodes_, c, d, 0, 1);
  if (d == 3) analyze(values.data() + 2 * nodes_, nullptr, c, d, 2, -1);
}

PhysicalGrid GridTransform::to_physical(const SpectralField& u) {
  if (u.shape() != shape_) throw ConfigurationError("to_physical: shape mismatch");
  PhysicalGrid grid(shape_.dim, points_);
  field_to_grid(u, grid.values);
  return grid;
}

SpectralField GridTransform::to_spectral(const PhysicalGrid& grid) {
  if (grid.dim != shape_.dim || grid.points != points_)
    throw ConfigurationError("to_spectral: grid does not match transform");
  SpectralField out(shape_);
  grid_to_field(grid.values, out);
  return out;
}

GridTransform& transform_for(Shape shape, int points) {
  thread_local std::map<std::tuple<int, int, int>, std::unique_ptr<GridTransform>> cache;
  auto& slot = cache[{shape.dim, shape.n, points}];
  if (!slot) slot = std::make_unique<GridTransform>(shape, points);
  return *slot;
}

PhysicalGrid to_physical(const SpectralField& u, int points) {
  return transform_for(u.shape(), points).to_physical(u);
}

SpectralField to_spectral(const PhysicalGrid& grid, Shape shape) {
  if (grid.dim != shape.dim)
    throw ConfigurationError("to_spectral: dimension mismatch");
  return transform_for(shape, grid.points).to_spectral(grid);
}

namespace reference {

namespace {

std::array<int, 3> node_coords(std::size_t j, int dim, int points) {
  std::array<int, 3> x{0, 0, 0};
  for (int axis = dim - 1; axis >= 0; --axis) {
    x[axis] = static_cast<int>(j % points);
    j /= points;
  }
  return x;
}

}  // namespace

PhysicalGrid to_physical_direct(const SpectralField& u, int points) {
  const int d = u.dim();
  PhysicalGrid grid(d, points);
  const std::size_t nodes = grid.node_count();
  const auto& modes = u.modes();
  for (std::size_t j = 0; j < nodes; ++j) {
    const auto x = node_coords(j, d, points);
    for (int c = 0; c < d; ++c) {
      Complex sum{};
      for (std::size_t m = 0; m < modes.size(); ++m) {
        const auto& k = modes.k(m);
        double phase = 0.0;
        for (int a = 0; a < d; ++a) phase += k[a] * kTwoPi * x[a] / points;
        sum += u.at(m, c) * std::polar(1.0, phase);
      }
      grid.values[c * nodes + j] = sum.real();
    }
  }
  return grid;
}

SpectralField to_spectral_direct(const PhysicalGrid& grid, Shape shape) {
  if (grid.dim != shape.dim) throw ConfigurationError("dimension mismatch");
  if (grid.points < shape.n + 1)
    throw ConfigurationError("grid has fewer points than retained modes");
  SpectralField out(shape);
  const std::size_t nodes = grid.node_count();
  const auto& modes = out.modes();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const auto& k = modes.k(m);
    for (int c = 0; c < shape.dim; ++c) {
      Complex sum{};
      for (std::size_t j = 0; j < nodes; ++j) {
        const auto x = node_coords(j, shape.dim, grid.points);
        double phase = 0.0;
        for (int a = 0; a < shape.dim; ++a) phase -= k[a] * kTwoPi * x[a] / grid.points;
        sum += grid.values[c * nodes + j] * std::polar(1.0, phase);
      }
      out.at(m, c) = sum / static_cast<double>(nodes);
    }
  }
  return out;
}

}  // namespace reference

}  // namespace cbf
