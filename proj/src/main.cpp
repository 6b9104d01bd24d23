// Copyright 2026 The contdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "contdp/audit.hpp"
#include "contdp/harness.hpp"

namespace {

using contdp::AuditConfig;
using contdp::ExperimentConfig;

// Runtime goes to stderr only; every file and stdout byte is determined by
// the config and seed.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  ~Stopwatch() {
    std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start_;
    std::fprintf(stderr, "runtime_seconds=%.3f\n", elapsed.count());
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void add_experiment_flags(CLI::App* cmd, ExperimentConfig* cfg,
                          std::string* noise_mode) {
  cmd->add_option("--mechanism", cfg->mechanism,
                  "bounded, modified, doubling, twolevel, kquery, kmodified, "
                  "kdoubling, ktwolevel; -gauss suffix where supported")
      ->capture_default_str();
  cmd->add_option("--queries", cfg->queries,
                  "comma list: max, min, quantile:<q>, count:<i>, topkval:<r>")
      ->capture_default_str();
  cmd->add_option("--stream", cfg->stream,
                  "generator (bernoulli:p=, bursty:len=,period=, "
                  "allzero, hot:i=) or file:<path>")
      ->capture_default_str();
  cmd->add_option("--d", cfg->d, "stream dimension")->capture_default_str();
  cmd->add_option("--T", cfg->T, "stream horizon")->capture_default_str();
  cmd->add_option("--eps", cfg->priv.epsilon, "privacy epsilon")
      ->capture_default_str();
  cmd->add_option("--delta", cfg->priv.delta, "privacy delta")
      ->capture_default_str();
  cmd->add_option("--beta", cfg->priv.beta, "failure probability")
      ->capture_default_str();
  cmd->add_option("--cmax", cfg->c_max,
                  "growth promise; 0 derives it per trial")
      ->capture_default_str();
  cmd->add_option("--trials", cfg->trials, "trial count")
      ->capture_default_str();
  cmd->add_option("--seed", cfg->seed, "master seed")->capture_default_str();
  cmd->add_option("--noise-mode", *noise_mode, "live, disabled or recorded")
      ->capture_default_str();
  cmd->add_option("--noise-tape", cfg->tape_file,
                  "sample log replayed in recorded mode");
  cmd->add_flag("--serial", cfg->serial, "force the serial trial runner");
}

int do_run(const ExperimentConfig& cfg, const std::string& out_prefix) {
  Stopwatch timer;
  std::vector<contdp::TrialResult> results = contdp::run_trials(cfg);
  std::vector<std::string> paths =
      contdp::write_result_files(cfg, results, out_prefix);
  for (const std::string& p : paths) {
    std::cout << "wrote " << p << "\n";
  }
  return 0;
}

int do_check(const ExperimentConfig& cfg, const std::string& out_prefix) {
  Stopwatch timer;
  contdp::StructureReport report = contdp::check_structure(cfg);
  std::filesystem::path p(out_prefix);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
  {
    std::ofstream f(out_prefix + ".csv");
    if (!f) throw std::runtime_error("cannot write " + out_prefix + ".csv");
    contdp::write_structure_csv(f, cfg, report);
  }
  {
    std::ofstream f(out_prefix + ".json");
    if (!f) throw std::runtime_error("cannot write " + out_prefix + ".json");
    f << contdp::structure_json(cfg, report);
  }
  std::cout << "wrote " << out_prefix << ".csv\n";
  std::cout << "wrote " << out_prefix << ".json\n";
  std::cout << (report.pass ? "STRUCTURE PASS" : "STRUCTURE FAIL")
            << " segment=" << report.segment_violations
            << " gap=" << report.gap_violations
            << " cap=" << report.cap_violations
            << " growth=" << report.growth_violations << " of "
            << report.trials << " trials\n";
  return 0;
}

int do_audit(const AuditConfig& cfg, const std::string& out_prefix) {
  Stopwatch timer;
  contdp::AuditResult result = contdp::run_audit(cfg);
  std::filesystem::path p(out_prefix);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
  {
    std::ofstream f(out_prefix + ".csv");
    if (!f) throw std::runtime_error("cannot write " + out_prefix + ".csv");
    contdp::write_audit_csv(f, cfg, result);
  }
  {
    std::ofstream f(out_prefix + ".json");
    if (!f) throw std::runtime_error("cannot write " + out_prefix + ".json");
    f << contdp::audit_json(cfg, result);
  }
  std::cout << "wrote " << out_prefix << ".csv\n";
  std::cout << "wrote " << out_prefix << ".json\n";
  char line[256];
  std::snprintf(line, sizeof(line),
                "AUDIT %s max_ratio=%.6g max_normalized=%.6g tested_bins=%lld",
                result.pass ? "PASS" : "FAIL", result.max_ratio,
                result.max_normalized,
                static_cast<long long>(result.tested_bins));
  std::cout << line << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "contdp: differentially private continual-observation mechanisms "
      "with an exact-oracle experiment harness"};
  app.require_subcommand(1);

  ExperimentConfig run_cfg;
  std::string run_noise = "live";
  std::string run_out = "out/run";
  CLI::App* run_cmd = app.add_subcommand(
      "run", "seeded multi-trial error statistics against the exact oracle");
  add_experiment_flags(run_cmd, &run_cfg, &run_noise);
  run_cmd->add_flag("--per-time", run_cfg.per_time,
                    "emit one error row per time step");
  run_cmd->add_option("--out", run_out, "output path prefix")
      ->capture_default_str();

  ExperimentConfig check_cfg;
  std::string check_noise = "live";
  std::string check_out = "out/check";
  CLI::App* check_cmd = app.add_subcommand(
      "check", "structural-claim checks: segment counts, histogram gaps, "
               "caps, between-close growth");
  add_experiment_flags(check_cmd, &check_cfg, &check_noise);
  check_cmd->add_option("--out", check_out, "output path prefix")
      ->capture_default_str();

  AuditConfig audit_cfg;
  std::string audit_out = "out/audit";
  CLI::App* audit_cmd = app.add_subcommand(
      "audit", "empirical closeness test on a fixed challenge pair");
  audit_cmd
      ->add_option("--mechanism", audit_cfg.mechanism,
                   "laplace, bounded or bounded_broken")
      ->capture_default_str();
  audit_cmd->add_option("--eps", audit_cfg.epsilon, "privacy epsilon")
      ->capture_default_str();
  audit_cmd->add_option("--delta", audit_cfg.delta, "privacy delta")
      ->capture_default_str();
  audit_cmd->add_option("--trials", audit_cfg.trials, "runs per input")
      ->capture_default_str();
  audit_cmd->add_option("--bin-width", audit_cfg.bin_width,
                        "output discretization width")
      ->capture_default_str();
  audit_cmd->add_option("--seed", audit_cfg.seed, "master seed")
      ->capture_default_str();
  audit_cmd->add_option("--d", audit_cfg.d, "stream dimension (at most 2)")
      ->capture_default_str();
  audit_cmd->add_option("--T", audit_cfg.T, "stream horizon (at most 6)")
      ->capture_default_str();
  audit_cmd->add_option("--tstar", audit_cfg.t_star, "neighbor flip time")
      ->capture_default_str();
  audit_cmd
      ->add_option("--neighbor-mode", audit_cfg.neighbor_mode,
                   "event or independent")
      ->capture_default_str();
  audit_cmd->add_option("--cx", audit_cfg.count_x, "laplace input x")
      ->capture_default_str();
  audit_cmd->add_option("--cy", audit_cfg.count_y, "laplace input y")
      ->capture_default_str();
  audit_cmd
      ->add_option("--min-support", audit_cfg.min_support,
                   "skip bins below this count")
      ->capture_default_str();
  audit_cmd
      ->add_option("--max-skipped-mass", audit_cfg.max_skipped_mass,
                   "error when skipped mass exceeds this")
      ->capture_default_str();
  audit_cmd->add_option("--out", audit_out, "output path prefix")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      run_cfg.noise_mode = contdp::parse_noise_mode(run_noise);
      return do_run(run_cfg, run_out);
    }
    if (check_cmd->parsed()) {
      check_cfg.noise_mode = contdp::parse_noise_mode(check_noise);
      return do_check(check_cfg, check_out);
    }
    if (audit_cmd->parsed()) {
      return do_audit(audit_cfg, audit_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}
