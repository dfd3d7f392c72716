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

#include "cbf/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>

#include <json.hpp>

#include "cbf/rng.hpp"
#include "cbf/transform.hpp"

namespace cbf {

std::size_t Shape::mode_count() const {
  std::size_t count = 1;
  for (int i = 0; i < dim; ++i) count *= static_cast<std::size_t>(n + 1);
  return count;
}

void validate(const Shape& shape) {
  if (shape.dim != 2 && shape.dim != 3)
    throw ConfigurationError("dimension must be 2 or 3");
  if (shape.n < 2 || shape.n % 2 != 0)
    throw ConfigurationError("resolution N must be even and >= 2");
  if (shape.dim == 3 && shape.n > 8)
    throw ConfigurationError("three-dimensional runs are limited to N <= 8");
}

ModeTable::ModeTable(Shape shape) : shape_(shape) {
  validate(shape);
  const int half = shape.half();
  const std::size_t count = shape.mode_count();
  k_.reserve(count);
  k2_.reserve(count);
  const int p = shape.modes_per_axis();
  for (std::size_t m = 0; m < count; ++m) {
    WaveVector k{0, 0, 0};
    std::size_t rest = m;
    for (int axis = shape.dim - 1; axis >= 0; --axis) {
      k[axis] = static_cast<int>(rest % p) - half;
      rest /= p;
    }
    k_.push_back(k);
    k2_.push_back(static_cast<double>(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
  }
}

std::size_t ModeTable::index_of(const WaveVector& k) const {
  const int half = shape_.half();
  std::size_t index = 0;
  for (int axis = 0; axis < shape_.dim; ++axis) {
    if (k[axis] < -half || k[axis] > half)
      throw ConfigurationError("wave vector outside the retained box");
    index = index * shape_.modes_per_axis() + (k[axis] + half);
  }
  for (int axis = shape_.dim; axis < 3; ++axis)
    if (k[axis] != 0) throw ConfigurationError("wave vector has extra axes");
  return index;
}

const ModeTable* ModeTable::get(Shape shape) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<ModeTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{shape.dim, shape.n}];
  if (!slot) slot = std::make_unique<ModeTable>(shape);
  return slot.get();
}

SpectralField::SpectralField(Shape shape)
    : modes_(ModeTable::get(shape)),
      coeffs_(shape.mode_count() * static_cast<std::size_t>(shape.dim)) {}

void SpectralField::set_mode(const WaveVector& k,
                             std::span<const Complex> value) {
  const std::size_t m = modes_->index_of(k);
  const std::size_t mc = modes_->conjugate(m);
  for (int c = 0; c < dim(); ++c) {
    at(m, c) = value[c];
    at(mc, c) = std::conj(value[c]);
  }
  if (m == mc)
    for (int c = 0; c < dim(); ++c) at(m, c) = value[c].real();
}

void require_same_shape(const SpectralField& a, const SpectralField& b,
                        const char* where) {
  if (a.empty() || b.empty() || !a.same_shape(b))
    throw ConfigurationError(std::string(where) + ": field shapes differ");
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

SpectralField& SpectralField::axpy(double a, const SpectralField& x) {
  require_same_shape(*this, x, "axpy");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += a * x.coeffs_[i];
  return *this;
}

void SpectralField::set_zero() { std::fill(coeffs_.begin(), coeffs_.end(), Complex{}); }

double SpectralField::reality_defect() const {
  double worst = 0.0;
  for (std::size_t m = 0; m < mode_count(); ++m) {
    const std::size_t mc = modes_->conjugate(m);
    for (int c = 0; c < dim(); ++c)
      worst = std::max(worst, std::abs(at(mc, c) - std::conj(at(m, c))));
  }
  return worst;
}

double SpectralField::divergence_defect() const {
  double worst = 0.0;
  for (std::size_t m = 0; m < mode_count(); ++m) {
    const auto& k = modes_->k(m);
    Complex dot{};
    for (int c = 0; c < dim(); ++c) dot += static_cast<double>(k[c]) * at(m, c);
    worst = std::max(worst, std::abs(dot));
  }
  return worst;
}

double SpectralField::max_abs() const {
  double worst = 0.0;
  for (const auto& c : coeffs_) worst = std::max(worst, std::abs(c));
  return worst;
}

double SpectralField::max_abs_diff(const SpectralField& other) const {
  require_same_shape(*this, other, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < coeffs_.size(); ++i)
    worst = std::max(worst, std::abs(coeffs_[i] - other.coeffs_[i]));
  return worst;
}

bool SpectralField::all_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](const Complex& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

namespace {

double volume(int dim) { return std::pow(kTwoPi, dim); }

}  // namespace

double inner(const SpectralField& u, const SpectralField& v) {
  require_same_shape(u, v, "inner");
  const auto a = u.coeffs();
  const auto b = v.coeffs();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    sum += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return volume(u.dim()) * sum;
}

double norm_h(const SpectralField& u) { return std::sqrt(inner(u, u)); }

double norm_grad(const SpectralField& u) {
  const auto& modes = u.modes();
  double sum = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m)
    for (int c = 0; c < u.dim(); ++c) sum += modes.k2(m) * std::norm(u.at(m, c));
  return std::sqrt(volume(u.dim()) * sum);
}

double norm_v(const SpectralField& u) {
  const double h = norm_h(u);
  const double g = norm_grad(u);
  return std::sqrt(h * h + g * g);
}

double norm_lp(const SpectralField& u, double p) {
  if (!(p >= 1.0)) throw DomainError("L^p norm requires p >= 1");
  const int points = dealiased_points(u.resolution(), p - 1.0);
  auto& transform = transform_for(u.shape(), points);
  std::vector<double> values(transform.node_count() * u.dim());
  transform.field_to_grid(u, values);
  const std::size_t nodes = transform.node_count();
  std::vector<double> power(nodes);
  for (std::size_t j = 0; j < nodes; ++j) {
    double mag2 = 0.0;
    for (int c = 0; c < u.dim(); ++c) mag2 += values[c * nodes + j] * values[c * nodes + j];
    power[j] = std::pow(mag2, 0.5 * p);
  }
  PhysicalGrid grid(u.dim(), points);
  return std::pow(grid.integrate(power), 1.0 / p);
}

double norm(const SpectralField& u, NormKind kind, double p) {
  switch (kind) {
    case NormKind::H: return norm_h(u);
    case NormKind::Grad: return norm_grad(u);
    case NormKind::V: return norm_v(u);
    case NormKind::Lp: return norm_lp(u, p);
  }
  throw DomainError("unknown norm kind");
}

void project_leray_inplace(SpectralField& u) {
  const auto& modes = u.modes();
  const int d = u.dim();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double k2 = modes.k2(m);
    if (k2 == 0.0) continue;
    const auto& k = modes.k(m);
    Complex dot{};
    for (int c = 0; c < d; ++c) dot += static_cast<double>(k[c]) * u.at(m, c);
    const Complex scale = dot / k2;
    for (int c = 0; c < d; ++c) u.at(m, c) -= static_cast<double>(k[c]) * scale;
  }
}

SpectralField project_leray(const SpectralField& u) {
  SpectralField out = u;
  project_leray_inplace(out);
  return out;
}

SpectralField random_divergence_free(std::uint64_t seed, double decay,
                                     double amplitude, Shape shape) {
  if (!(decay > 0.0)) throw DomainError("decay exponent must be positive");
  SpectralField u(shape);
  CounterRng rng(seed, kFieldStream);
  const auto& modes = u.modes();
  const int d = shape.dim;
  const std::size_t zero = modes.zero_index();
  for (std::size_t m = 0; m <= zero; ++m) {
    const double envelope = amplitude * std::pow(1.0 + modes.k2(m), -0.5 * decay);
    const std::size_t mc = modes.conjugate(m);
    for (int c = 0; c < d; ++c) {
      if (m == zero) {
        u.at(m, c) = envelope * rng.normal();
      } else {
        const double re = rng.normal();
        const double im = rng.normal();
        const Complex z = envelope * std::numbers::sqrt2 / 2.0 * Complex(re, im);
        u.at(m, c) = z;
        u.at(mc, c) = std::conj(z);
      }
    }
  }
  project_leray_inplace(u);
  return u;
}

std::vector<std::array<double, 3>> polarizations(const WaveVector& k, int dim) {
  std::vector<std::array<double, 3>> out;
  const double kx = k[0], ky = k[1], kz = k[2];
  const double norm_k = std::sqrt(kx * kx + ky * ky + kz * kz);
  if (norm_k == 0.0) {
    for (int c = 0; c < dim; ++c) {
      std::array<double, 3> e{0.0, 0.0, 0.0};
      e[c] = 1.0;
      out.push_back(e);
    }
    return out;
  }
  if (dim == 2) {
    out.push_back({-ky / norm_k, kx / norm_k, 0.0});
    return out;
  }
  // Cross with the axis least aligned with k.
  int axis = 0;
  const double abs_k[3] = {std::abs(kx), std::abs(ky), std::abs(kz)};
  for (int c = 1; c < 3; ++c)
    if (abs_k[c] < abs_k[axis]) axis = c;
  std::array<double, 3> e{0.0, 0.0, 0.0};
  e[axis] = 1.0;
  std::array<double, 3> a{ky * e[2] - kz * e[1], kz * e[0] - kx * e[2],
                          kx * e[1] - ky * e[0]};
  const double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
  for (auto& x : a) x /= na;
  std::array<double, 3> b{(ky * a[2] - kz * a[1]) / norm_k,
                          (kz * a[0] - kx * a[2]) / norm_k,
                          (kx * a[1] - ky * a[0]) / norm_k};
  out.push_back(a);
  out.push_back(b);
  return out;
}

std::vector<BasisDirection> solenoidal_basis(Shape shape) {
  const ModeTable* modes = ModeTable::get(shape);
  std::vector<BasisDirection> basis;
  const std::size_t zero = modes->zero_index();
  for (const auto& a : polarizations(modes->k(zero), shape.dim))
    basis.push_back({zero, a, false});
  for (std::size_t m = 0; m < zero; ++m)
    for (const auto& a : polarizations(modes->k(m), shape.dim)) {
      basis.push_back({m, a, false});
      basis.push_back({m, a, true});
    }
  return basis;
}

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(std::begin(bytes), std::end(bytes));
  out.insert(out.end(), std::begin(bytes), std::end(bytes));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t& offset) {
  if (offset + sizeof(T) > in.size())
    throw ConfigurationError("snapshot truncated");
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(std::begin(bytes), std::end(bytes));
  offset += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const SpectralField& u) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + u.coeffs().size() * 16);
  put_le<std::int32_t>(out, u.dim());
  put_le<std::int32_t>(out, u.resolution());
  for (const auto& c : u.coeffs()) {
    put_le<double>(out, c.real());
    put_le<double>(out, c.imag());
  }
  return out;
}

SpectralField decode_snapshot(std::span<const std::uint8_t> bytes) {
  std::size_t offset = 0;
  Shape shape;
  shape.dim = get_le<std::int32_t>(bytes, offset);
  shape.n = get_le<std::int32_t>(bytes, offset);
  validate(shape);
  SpectralField u(shape);
  for (auto& c : u.coeffs()) {
    const double re = get_le<double>(bytes, offset);
    const double im = get_le<double>(bytes, offset);
    c = Complex(re, im);
  }
  if (offset != bytes.size()) throw ConfigurationError("snapshot has trailing bytes");
  return u;
}

void write_snapshot(const std::string& path, const SpectralField& u) {
  const auto bytes = encode_snapshot(u);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

SpectralField read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

std::string snapshot_json(const SpectralField& u) {
  nlohmann::json j;
  j["dim"] = u.dim();
  j["N"] = u.resolution();
  auto& modes = j["modes"] = nlohmann::json::array();
  for (std::size_t m = 0; m < u.mode_count(); ++m) {
    nlohmann::json entry;
    const auto& k = u.modes().k(m);
    entry["k"] = std::vector<int>(k.begin(), k.begin() + u.dim());
    auto& c = entry["c"] = nlohmann::json::array();
    for (int comp = 0; comp < u.dim(); ++comp)
      c.push_back({u.at(m, comp).real(), u.at(m, comp).imag()});
    modes.push_back(std::move(entry));
  }
  return j.dump();
}

SpectralField snapshot_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Shape shape{j.at("dim").get<int>(), j.at("N").get<int>()};
  validate(shape);
  SpectralField u(shape);
  const auto& modes = j.at("modes");
  if (modes.size() != u.mode_count())
    throw ConfigurationError("snapshot mode count does not match header");
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const auto k = modes[m].at("k").get<std::vector<int>>();
    WaveVector wv{0, 0, 0};
    for (int a = 0; a < shape.dim; ++a) wv[a] = k.at(a);
    if (u.modes().index_of(wv) != m)
      throw ConfigurationError("snapshot modes are not in lexicographic order");
    const auto& c = modes[m].at("c");
    for (int comp = 0; comp < shape.dim; ++comp)
      u.at(m, comp) = Complex(c.at(comp).at(0).get<double>(), c.at(comp).at(1).get<double>());
  }
  return u;
}

}  // namespace cbf
