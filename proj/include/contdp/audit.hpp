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

#ifndef CONTDP_AUDIT_HPP_
#define CONTDP_AUDIT_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "contdp/noise.hpp"

namespace contdp {

// Small-scale empirical closeness test on a fixed challenge pair: run the
// mechanism many times on inputs x and y, discretize the full output vector
// into bins, and compare the per-bin frequencies in both directions against
// e^epsilon (plus delta and a 3-standard-error statistical slack). A fixed
// pair is a necessary condition only; the adaptive game it simplifies is a
// proof notion.
struct AuditConfig {
  // "laplace": one noisy count, inputs count_x vs count_y.
  // "bounded": the bounded max-sum mechanism on an all-ones stream vs its
  //   neighbor, with the interval gap forced to 1 so closes actually happen
  //   (the privacy calibration is independent of the gap).
  // "bounded_broken": deliberately broken variant; the expected failure.
  std::string mechanism = "laplace";
  double epsilon = 1.0;
  double delta = 0.0;
  long long trials = 100000;  // per input; must be >= 100000
  double bin_width = 1.0;
  std::uint64_t seed = 1;
  int d = 1;        // stream mechanisms: at most 2
  long long T = 4;  // stream mechanisms: at most 6
  long long t_star = 1;               // event-neighbor flip time
  std::string neighbor_mode = "event";  // event | independent
  long long count_x = 3;  // laplace inputs
  long long count_y = 4;
  long long min_support = 50;   // bins below this are skipped
  double max_skipped_mass = 0.01;

  void validate() const;
};

struct AuditBin {
  std::string key;  // '|'-joined bin indices of the output vector
  long long count_x = 0;
  long long count_y = 0;
  double ratio_xy = 0.0;  // (p_x - delta) / p_y; inf on one-sided support
  double ratio_yx = 0.0;
  bool tested = false;
};

struct AuditResult {
  bool pass = false;
  // max over tested bins and both directions of the raw ratio.
  double max_ratio = 0.0;
  // Same maximum normalized by each bin's own e^eps (1 + slack) threshold;
  // pass means this is at most 1.
  double max_normalized = 0.0;
  // A bin past min_support on one side with zero mass on the other.
  bool disjoint_support = false;
  long long tested_bins = 0;
  long long skipped_bins = 0;
  double skipped_mass = 0.0;
  std::vector<AuditBin> bins;  // deterministic (lexicographic key) order
};

// Runs 2 * trials mechanism executions. Throws std::runtime_error when the
// skipped low-support mass exceeds the configured limit.
AuditResult run_audit(const AuditConfig& config);

std::string audit_config_json(const AuditConfig& config);
std::uint64_t audit_config_hash(const AuditConfig& config);

// CSV: "# config_hash=<hex> seed=<n>", then "bin,metric,value" rows with
// metrics count_x, count_y, ratio_xy, ratio_yx, tested.
void write_audit_csv(std::ostream& out, const AuditConfig& config,
                     const AuditResult& result);
std::string audit_json(const AuditConfig& config, const AuditResult& result);

}  // namespace contdp

#endif  // CONTDP_AUDIT_HPP_
