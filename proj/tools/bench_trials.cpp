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

// Benchmarks the OpenMP trial runner against the serial reference and
// verifies both produce identical per-trial results.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "contdp/harness.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
  return d.count();
}

bool identical(const std::vector<contdp::TrialResult>& a,
               const std::vector<contdp::TrialResult>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].trial != b[i].trial || a[i].max_error != b[i].max_error ||
        a[i].alpha_at_beta != b[i].alpha_at_beta ||
        a[i].closes != b[i].closes ||
        a[i].cmax_realized != b[i].cmax_realized) {
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  contdp::ExperimentConfig cfg;
  cfg.mechanism = "doubling";
  cfg.queries = "max";
  cfg.stream = "bernoulli:p=0.3";
  cfg.d = 4;
  cfg.T = 4096;
  cfg.trials = 64;
  cfg.seed = 7;

  CLI::App app{"trial-runner benchmark: serial reference vs OpenMP"};
  app.add_option("--mechanism", cfg.mechanism)->capture_default_str();
  app.add_option("--queries", cfg.queries)->capture_default_str();
  app.add_option("--stream", cfg.stream)->capture_default_str();
  app.add_option("--d", cfg.d)->capture_default_str();
  app.add_option("--T", cfg.T)->capture_default_str();
  app.add_option("--trials", cfg.trials)->capture_default_str();
  app.add_option("--seed", cfg.seed)->capture_default_str();
  app.add_option("--eps", cfg.priv.epsilon)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp: not available; both runs are serial\n");
#endif

  auto t0 = std::chrono::steady_clock::now();
  std::vector<contdp::TrialResult> serial = contdp::run_trials_serial(cfg);
  double serial_s = seconds_since(t0);

  auto t1 = std::chrono::steady_clock::now();
  std::vector<contdp::TrialResult> parallel = contdp::run_trials(cfg);
  double parallel_s = seconds_since(t1);

  bool same = identical(serial, parallel);
  std::printf("serial:   %8.3f s for %d trials\n", serial_s, cfg.trials);
  std::printf("parallel: %8.3f s for %d trials\n", parallel_s, cfg.trials);
  if (parallel_s > 0.0) {
    std::printf("speedup:  %8.2fx\n", serial_s / parallel_s);
  }
  std::printf("results identical: %s\n", same ? "yes" : "NO");
  return same ? 0 : 1;
}
