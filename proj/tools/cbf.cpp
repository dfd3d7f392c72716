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

// cbf: command-line driver for simulations, estimators, the control solver
// and the verification suites.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbf/experiments.hpp"

using namespace cbf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

ExperimentConfig prepare(const Common& common, const std::string& id) {
  ExperimentConfig c = common.config.empty() ? ExperimentConfig{} : load_config(common.config);
  if (common.config.empty()) c.experiment_id = id;
  if (common.seed) {
    c.noise_seed = *common.seed;
    c.optimizer.seed = *common.seed;
  }
  if (!common.out.empty()) c.output = common.out;
  if (common.jobs > 0) omp_set_num_threads(common.jobs);
  fs::create_directories(c.output);
  return c;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  out << std::setw(2) << j << "\n";
}

// All records go through one writer, in order.
class NdjsonWriter {
 public:
  explicit NdjsonWriter(const fs::path& path) : out_(path) {
    if (!out_) throw ConfigurationError("cannot write " + path.string());
  }
  void write(const json& j) { out_ << j.dump() << "\n"; }
  void write(const ResultRecord& r) { out_ << to_ndjson_line(r) << "\n"; }

 private:
  std::ofstream out_;
};

json summary_base(const ExperimentConfig& c, const char* command, double seconds) {
  return {{"command", command}, {"experiment-id", c.experiment_id}, {"seconds", seconds},
          {"threads", omp_get_max_threads()}, {"config", config_to_json(c)}};
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int run_simulate(const Common& common) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = prepare(common, "simulate");
  c.validate();
  const fs::path out = c.output;
  const auto y0 = c.build_y0();
  const auto forcing = c.build_forcing();
  std::optional<NoiseSpec> noise;
  if (c.q0 > 0.0) noise = c.noise(c.n_list.front());
  const Trajectory traj = simulate(y0, c.params, forcing, noise, c.time, c.noise_seed);
  write_trajectory_csv((out / "trajectory.csv").string(), traj, c.params.r);
  write_snapshot((out / "initial.bin").string(), traj.fields.front());
  write_snapshot((out / "final.bin").string(), traj.final());
  json s = summary_base(c, "simulate", elapsed(start));
  s["noise-scale"] = noise ? json(noise->n) : json(nullptr);
  s["final"] = {{"norm_h", norm_h(traj.final())}, {"norm_v", norm_v(traj.final())}};
  s["energy-budget-residual"] = noise ? json(nullptr) : json(energy_budget_residual(traj, c.params, forcing));
  write_json(out / "summary.json", s);
  std::printf("simulated %d steps; final ||u||_H = %.6e\n", c.time.steps, norm_h(traj.final()));
  return 0;
}

int run_laplace(const Common& common) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = prepare(common, "laplace");
  c.validate();
  const fs::path out = c.output;
  const auto y0 = c.build_y0();
  const auto g = c.build_observable();
  const auto forcing = c.build_forcing();
  NdjsonWriter writer(out / "results.ndjson");
  json rows = json::array();
  for (std::size_t j = 0; j < c.n_list.size(); ++j) {
    const double n = c.n_list[j];
    const int samples = c.samples_for(n);
    const std::uint64_t seed = CounterRng::mix(c.noise_seed + j);
    const auto est = estimate_laplace(y0, g, c.time.T, samples, c.params, forcing, c.noise(n),
                                      c.time, seed);
    const ResultRecord rec{c.experiment_id, n, samples, est.t, est.observable_id,
                           est.value, est.ci_half_width, false, seed};
    writer.write(rec);
    json row = to_json(rec);
    row["ess"] = est.ess;
    rows.push_back(row);
    std::printf("n=%-6g M=%-7d value=% .8f ci=%.2e ess=%.0f\n", n, samples, est.value,
                est.ci_half_width, est.ess);
  }
  json s = summary_base(c, "laplace", elapsed(start));
  s["estimates"] = rows;
  write_json(out / "summary.json", s);
  return 0;
}

int run_control(const Common& common) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = prepare(common, "control");
  c.validate();
  const fs::path out = c.output;
  const auto y0 = c.build_y0();
  const auto g = c.build_observable();
  const ValueResult v = minimize_value(y0, g, c.params, c.build_forcing(), c.noise(), c.time,
                                       c.optimizer);
  NdjsonWriter writer(out / "value.ndjson");
  writer.write(json{{"V", v.V}, {"iters", v.iterations}, {"grad-norm", v.grad_norm},
                    {"converged", v.converged}, {"restart-id", v.restart_id}});
  for (const auto& r : v.restarts)
    writer.write(json{{"V", r.V}, {"iters", r.iterations}, {"grad-norm", r.grad_norm},
                      {"converged", r.converged}, {"restart-id", r.restart_id}});
  const fs::path dir = out / "control";
  fs::create_directories(dir);
  for (int i = 0; i < v.control.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "slot_%05d.bin", i);
    write_snapshot((dir / name).string(), v.control.slots[i]);
  }
  {
    std::ofstream trace(out / "trace.csv");
    trace << "iteration,cost,grad_norm,step\n" << std::setprecision(17);
    for (std::size_t i = 0; i < v.trace.size(); ++i)
      trace << i << "," << v.trace[i].cost << "," << v.trace[i].grad_norm << ","
            << v.trace[i].step << "\n";
  }
  json s = summary_base(c, "control", elapsed(start));
  s["value"] = to_json(v);
  const int mid = c.time.steps / 2;
  OptimizerOptions dpp_opt = c.optimizer;
  dpp_opt.restarts = 0;
  const auto dpp = dpp_residual(y0, g, c.time.time(mid), c.params, c.build_forcing(), c.noise(),
                                c.time, dpp_opt);
  s["dpp"] = {{"eta", c.time.time(mid)}, {"value", dpp.value}, {"first-leg", dpp.first_leg},
              {"tail-value", dpp.tail_value}, {"residual", dpp.residual}};
  write_json(out / "summary.json", s);
  std::printf("V = %.10f (%s after %d iterations, restart %d); dpp residual %.2e\n", v.V,
              v.converged ? "converged" : "not converged", v.iterations, v.restart_id,
              dpp.residual);
  return v.converged ? 0 : 2;
}

int run_converge(const Common& common) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = prepare(common, "convergence");
  const ConvergenceReport rep = run_convergence_study(c);
  const fs::path out = c.output;
  NdjsonWriter writer(out / "results.ndjson");
  for (const auto& r : rep.records) writer.write(r);
  {
    std::ofstream csv(out / "convergence.csv");
    csv << "n,M,estimate,ci,gap,ess\n" << std::setprecision(17);
    for (const auto& row : rep.rows)
      csv << row.n << "," << row.samples << "," << row.estimate << "," << row.ci << ","
          << row.gap << "," << row.ess << "\n";
  }
  json s = summary_base(c, "converge", elapsed(start));
  s["report"] = to_json(rep);
  write_json(out / "summary.json", s);
  for (const auto& row : rep.rows)
    std::printf("n=%-6g M=%-7d estimate=% .8f gap=%.3e ci=%.2e\n", row.n, row.samples,
                row.estimate, row.gap, row.ci);
  std::printf("V = %.8f, slope %.3f: %s\n", rep.reference_V, rep.slope, rep.pass ? "PASS" : "FAIL");
  return rep.pass ? 0 : 1;
}

int run_verify(const Common& common) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = prepare(common, "verify");
  const PropertyReport rep = run_property_suite(c);
  json s = summary_base(c, "verify", elapsed(start));
  s["report"] = to_json(rep);
  write_json(fs::path(c.output) / "summary.json", s);
  for (const auto& check : rep.checks)
    std::printf("%s %-58s worst=%.3e tol=%.1e cases=%d\n", check.passed ? "PASS" : "FAIL",
                check.name.c_str(), check.worst, check.tolerance, check.cases);
  return rep.passed() ? 0 : 1;
}

int run_moments(const Common& common) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = prepare(common, "moments");
  const MomentStudyReport rep = run_moment_study(c);
  {
    std::ofstream csv(fs::path(c.output) / "moments.csv");
    csv << "n,log_statistic,per_n,mean_sup_v2,mean_dissipation\n" << std::setprecision(17);
    for (const auto& row : rep.statistic.rows)
      csv << row.n << "," << row.log_statistic << "," << row.per_n << "," << row.mean_sup_v2
          << "," << row.mean_dissipation << "\n";
  }
  json s = summary_base(c, "moments", elapsed(start));
  s["report"] = to_json(rep);
  write_json(fs::path(c.output) / "summary.json", s);
  std::printf("branch %s, c1 = %.4e; bounded=%d nonincreasing=%d\n",
              to_string(rep.statistic.condition.branch), rep.statistic.c1, rep.bounded,
              rep.nonincreasing);
  return rep.bounded ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic damped Navier-Stokes: simulation, Laplace estimates and control"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON experiment configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--seed", common.seed, "override the noise and restart seeds");
    sub->add_option("--jobs", common.jobs, "worker threads (default: OpenMP setting)")->check(CLI::PositiveNumber);
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Common&);
  };
  const Command commands[] = {
      {"simulate", "integrate one trajectory", run_simulate},
      {"laplace", "plain Monte Carlo Laplace estimates over the n-list", run_laplace},
      {"control", "minimize the control cost and check dynamic programming", run_control},
      {"converge", "tilted estimates against the control value", run_converge},
      {"verify", "operator identity and inequality suite", run_verify},
      {"moments", "exponential moment statistic", run_moments},
  };
  std::vector<std::pair<CLI::App*, int (*)(const Common&)>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, c.run);
  }
  CLI11_PARSE(app, argc, argv);
  try {
    for (const auto& [sub, run] : subs)
      if (sub->parsed()) return run(common);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
