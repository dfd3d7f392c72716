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

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cbf {

/// Counter-based stream: the i-th draw is a pure function of
/// (seed, stream, substream, i), so results do not depend on thread schedule.
/// The output sequence is SplitMix64 started from a hashed key.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream,
             std::uint64_t substream = 0)
      : key_(mix(mix(mix(seed) ^ (stream * 0x9e3779b97f4a7c15ULL)) ^
                 (substream * 0xc2b2ae3d27d4eb4fULL))) {}

  std::uint64_t next() {
    ++counter_;
    return mix(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform on the open interval (0,1).
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream tags for draws that are not tied to a (sample, step) pair.
inline constexpr std::uint64_t kFieldStream = 0xf1e1d00000000000ULL;
inline constexpr std::uint64_t kBootstrapStream = 0xb007570000000000ULL;
inline constexpr std::uint64_t kRestartStream = 0x5e57a27000000000ULL;

}  // namespace cbf
