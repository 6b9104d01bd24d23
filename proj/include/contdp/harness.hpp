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

#ifndef CONTDP_HARNESS_HPP_
#define CONTDP_HARNESS_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "contdp/kquery.hpp"

namespace contdp {

// One experiment: a mechanism, a query set, a stream family, privacy
// parameters, and a trial budget. Fully serializable; the config plus its
// seed determines every output byte.
struct ExperimentConfig {
  // bounded, modified, doubling, twolevel, kquery, kmodified, kdoubling,
  // ktwolevel; the k-family and doubling also accept a "-gauss" suffix.
  std::string mechanism = "bounded";
  std::string queries = "max";  // query-set string, empty means "max"
  // Generator string ("bernoulli:p=0.3", ...) or "file:<path>" for a CSV
  // stream shared by all trials.
  std::string stream = "bernoulli:p=0.5";
  int d = 1;
  long long T = 16;
  PrivacyParams priv;
  long long c_max = 0;  // 0 derives the promise from each trial's stream
  int trials = 1;
  std::uint64_t seed = 1;
  NoiseMode noise_mode = NoiseMode::kLive;
  std::string tape_file;  // sample log replayed in Recorded mode
  bool per_time = false;  // emit one error row per time step
  bool serial = false;    // force the serial trial runner

  // Throws std::invalid_argument on unknown mechanisms, bad dimensions, or a
  // Recorded mode without a tape.
  void validate() const;
};

bool known_mechanism(const std::string& name);
bool mechanism_is_gaussian(const std::string& name);  // "-gauss" suffix
// Mechanisms that consume a c_max (or Delta) promise.
bool mechanism_needs_cmax(const std::string& name);

NoiseMode parse_noise_mode(const std::string& text);
std::string to_string(NoiseMode mode);

// One trial's statistics against the exact oracle.
struct TrialResult {
  int trial = 0;
  double max_error = 0.0;
  double alpha_at_beta = 0.0;  // empirical (1-beta) quantile of step error
  long long closes = 0;        // top-level partition closes
  long long cmax_realized = 0;
  std::vector<double> per_step_error;  // filled only when per_time is set
};

TrialResult run_single_trial(const ExperimentConfig& config, int trial);

// Reference runner: one trial after another on the calling thread.
std::vector<TrialResult> run_trials_serial(const ExperimentConfig& config);
// Parallel runner: trials are independent, so they fan out across OpenMP
// threads when available (and config.serial is off). Results are identical
// to the serial runner's, in trial order.
std::vector<TrialResult> run_trials(const ExperimentConfig& config);

// Canonical JSON serialization of the config; hashed into every result file.
std::string config_json(const ExperimentConfig& config);
// FNV-1a 64 over config_json. Execution knobs (serial) are excluded so a
// parallel rerun reproduces the same bytes.
std::uint64_t config_hash(const ExperimentConfig& config);
std::uint64_t fnv1a64(const std::string& text);

// CSV schema: "trial,t,metric,value"; t is empty on per-trial rows. A
// "# config_hash=<hex> seed=<n>" comment line precedes the header.
void write_trials_csv(std::ostream& out, const ExperimentConfig& config,
                      const std::vector<TrialResult>& results);
// JSON summary: config echo, config hash, per-metric aggregates, and the
// mechanism's calibrated bounds (see README for the schema).
std::string summary_json(const ExperimentConfig& config,
                         const std::vector<TrialResult>& results);
// Gnuplot-ready columns: trial max_error alpha_at_beta closes cmax_realized.
void write_plot_dat(std::ostream& out, const ExperimentConfig& config,
                    const std::vector<TrialResult>& results);

// Writes <prefix>.csv, <prefix>.json and <prefix>.dat; returns the paths.
std::vector<std::string> write_result_files(
    const ExperimentConfig& config, const std::vector<TrialResult>& results,
    const std::string& prefix);

// Structural-claim checks: segment counts against the doubling bound (or the
// c_max-style cap claim), histogram gaps at closes against the accumulated
// noise bound, hard partition caps, and the between-close growth of the
// maximal query.
struct StructureTrial {
  int trial = 0;
  long long closes = 0;
  long long cmax_realized = 0;
  double max_gap = 0.0;     // max over closes of max_i |s_i - h_i|
  double min_growth = 0.0;  // min between-close growth; 0 when < 2 closes
  bool segment_violation = false;
  bool gap_violation = false;
  bool cap_violation = false;
  bool growth_violation = false;
};

struct StructureReport {
  std::vector<StructureTrial> per_trial;
  int trials = 0;
  int segment_violations = 0;
  int gap_violations = 0;
  int cap_violations = 0;  // hard caps; any violation is a bug
  int growth_violations = 0;
  double segment_bound = 0.0;  // at the largest realized c_max
  double gap_bound = 0.0;
  double slack = 0.0;  // 3 sqrt(beta / trials)
  bool pass = false;
};

// Runs config.trials instrumented trials. pass means zero cap violations
// and every statistical violation fraction at most beta + slack.
StructureReport check_structure(const ExperimentConfig& config);

void write_structure_csv(std::ostream& out, const ExperimentConfig& config,
                         const StructureReport& report);
std::string structure_json(const ExperimentConfig& config,
                           const StructureReport& report);

}  // namespace contdp

#endif  // CONTDP_HARNESS_HPP_
