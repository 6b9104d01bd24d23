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

#ifndef CONTDP_PARTITION_HPP_
#define CONTDP_PARTITION_HPP_

#include <functional>
#include <vector>

#include "contdp/cont_histogram.hpp"
#include "contdp/noise.hpp"
#include "contdp/stream.hpp"

namespace contdp {

// Interval thresholds K_j. Additive: K_j = base + j * step. Doubling:
// K_j = 2^{j-1}.
struct ThresholdSchedule {
  enum class Kind { kAdditive, kDoubling };

  Kind kind = Kind::kAdditive;
  double step = 0.0;
  double base = 0.0;

  double threshold(long long j) const;
};

// Largest integer j with j < log2(T); doubling-style runs cap their interval
// index strictly below log2 of the horizon. T must be >= 2.
long long strict_log2_cap(long long T);

struct PartitionConfig {
  ThresholdSchedule schedule;
  double query_noise_scale = 0.0;   // per-step comparison noise
  double thresh_noise_scale = 0.0;  // per-interval threshold noise
  double cap = 0.0;                 // closes permitted while j <= cap
};

// Query evaluated on the running (real-valued, noisy) histogram.
using QueryFn = std::function<double(const std::vector<double>&)>;

// One step's outcome: Continue, or Closed carrying the refreshed noisy
// histogram.
struct StepEvent {
  bool closed = false;
  std::vector<double> histogram;
};

// Noisy-threshold interval partitioner. Per step it accumulates the row into
// the in-interval counts c and the running histogram s, draws fresh
// comparison noise, and closes the interval when g(s) + noise exceeds the
// noisy threshold while j is within the cap. On a close the in-interval
// counts are inserted into H, the threshold advances (fresh threshold noise),
// and s is replaced by H's output plus the configured offset. Between closes
// s changes only by the raw rows, so downstream outputs are constant there.
//
// Draw order per step: [first step only: threshold noise], comparison noise,
// then on a close H's insert noise followed by the next threshold noise.
// This canonical order is what Recorded tapes replay. End of stream closes
// the last interval at T without an insert (finish()).
class MetaPartition {
 public:
  // start_time shifts the step clock so suffix runs report absolute times.
  MetaPartition(PartitionConfig config, int d, std::vector<double> offset,
                long long start_time = 0);

  StepEvent step(const Row& row, const QueryFn& g, ContinualHistogram& H,
                 RandomSource& rng);
  void finish(long long T);

  const std::vector<double>& running() const { return s_; }
  const std::vector<long long>& in_interval_counts() const { return c_; }
  const std::vector<long long>& close_times() const { return closes_; }
  long long interval_index() const { return j_; }
  long long time() const { return t_; }
  long long end_time() const { return end_time_; }  // 0 until finish()
  double current_threshold() const;
  double noisy_threshold() const { return ktilde_; }

 private:
  PartitionConfig config_;
  int d_;
  std::vector<double> offset_;
  std::vector<double> s_;
  std::vector<long long> c_;
  std::vector<long long> closes_;
  long long j_ = 1;
  long long t_ = 0;
  long long end_time_ = 0;
  double ktilde_ = 0.0;
  bool threshold_drawn_ = false;
};

// Free-function veneer over MetaPartition::step.
StepEvent meta_step(MetaPartition& state, const Row& row, const QueryFn& g,
                    ContinualHistogram& H, RandomSource& rng);

}  // namespace contdp

#endif  // CONTDP_PARTITION_HPP_
