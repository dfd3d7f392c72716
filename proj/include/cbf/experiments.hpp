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

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbf/control.hpp"
#include "cbf/laplace.hpp"
#include "cbf/simulator.hpp"

namespace cbf {

/// Generator spec for random_divergence_free.
struct FieldSpec {
  std::uint64_t seed = 1;
  double decay = 2.0;
  double amplitude = 0.3;

  SpectralField build(Shape shape) const;
};

struct ForcingConfig {
  std::string id = "zero";  // zero | constant | single_mode
  FieldSpec field;          // constant: random pattern
  WaveVector k{1, 0, 0};    // single_mode
  std::vector<double> coeff{0.0, 1.0};
  double amplitude = 0.0;
  double omega = 0.0;
};

struct ObservableConfig {
  std::string id = "tanh";  // tanh | saturating-distance | linear | constant
  double cap = 0.5;
  double value = 0.0;       // constant entry
  FieldSpec field{7, 2.0, 0.1};
};

struct PropertySuiteConfig {
  int n = 16;
  int fields = 1000;
  std::vector<double> r_values{3.0, 4.0, 5.0};
  std::uint64_t seed = 2024;
};

struct MomentConfig {
  double c1_fraction = 0.5;
  int samples = 200;
};

struct ExperimentConfig {
  std::string experiment_id = "convergence";
  int dim = 2;
  int n = 8;
  PhysicalParams params;
  ForcingConfig forcing;
  double q0 = 1.0;
  double s = std::numeric_limits<double>::quiet_NaN();
  ObservableConfig observable;
  FieldSpec y0{1, 2.0, 0.3};
  std::vector<double> n_list{4, 16, 64, 256};
  double samples_base = 4000.0;   // M(n) = ceil(base * n^power)
  double samples_power = 0.5;
  TimeGrid time{0.0, 0.25, 25};
  std::uint64_t noise_seed = 11;
  OptimizerOptions optimizer;
  PropertySuiteConfig property;
  MomentConfig moments;
  std::string output = "results";

  Shape shape() const { return Shape{dim, n}; }
  NoiseSpec noise(double scale = 1.0) const;
  ForcingSpec build_forcing() const;
  Observable build_observable() const;
  SpectralField build_y0() const { return y0.build(shape()); }
  int samples_for(double scale) const;

  /// Throws ConfigurationError for unknown ids, a non-increasing n-list,
  /// or (outside test mode) a failing moment condition.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

/// Result line of the NDJSON stream.
struct ResultRecord {
  std::string experiment_id;
  double n = 1.0;
  int samples = 0;
  double t = 0.0;
  std::string observable_id;
  double value = 0.0;
  double ci = 0.0;
  bool tilted = false;
  std::uint64_t seed = 0;

  bool operator==(const ResultRecord&) const = default;
};

nlohmann::json to_json(const ResultRecord& r);
ResultRecord record_from_json(const nlohmann::json& j);
std::string to_ndjson_line(const ResultRecord& r);
ResultRecord parse_ndjson_line(const std::string& line);

nlohmann::json to_json(const ValueResult& v);

struct ConvergenceRow {
  double n = 1.0;
  int samples = 0;
  double estimate = 0.0;
  double ci = 0.0;
  double gap = 0.0;
  double ess = 0.0;
};

struct ConvergenceReport {
  double reference_V = 0.0;
  bool reference_converged = false;
  int reference_iterations = 0;
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;
  bool gaps_nonincreasing = false;
  bool statistically_zero = false;  // every gap within its CI
  bool pass = false;
  std::vector<ResultRecord> records;
};

nlohmann::json to_json(const ConvergenceReport& r);

/// Tilted estimates for each n against -V from the control solver. Throws
/// Error when the reference optimizer does not converge.
ConvergenceReport run_convergence_study(const ExperimentConfig& config);

struct IdentityCheck {
  std::string name;
  double worst = 0.0;       // largest normalized violation or residual
  double tolerance = 0.0;
  int cases = 0;
  bool passed = true;
  double coarse_sum = 0.0;  // refinement checks: summed residuals on M and 2M
  double fine_sum = 0.0;
};

struct PropertyReport {
  std::vector<IdentityCheck> checks;
  bool passed() const;
  const IdentityCheck& find(const std::string& name) const;
};

nlohmann::json to_json(const PropertyReport& r);

/// Operator identities and inequalities over random fields at N =
/// config.property.n for every configured r.
PropertyReport run_property_suite(const ExperimentConfig& config);

struct MomentStudyReport {
  MomentReport statistic;
  bool bounded = false;       // (1/n) log statistic at max n <= 1.2 x value at min n
  bool nonincreasing = false; // successive (1/n) log statistics within 20% slack
};

nlohmann::json to_json(const MomentStudyReport& r);

/// Throws DomainError naming the branch when the moment condition fails.
MomentStudyReport run_moment_study(const ExperimentConfig& config);

}  // namespace cbf
