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

#include "contdp/partition.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace contdp {

double ThresholdSchedule::threshold(long long j) const {
  if (j < 1) {
    throw std::invalid_argument("interval index must be >= 1");
  }
  switch (kind) {
    case Kind::kAdditive:
      return base + static_cast<double>(j) * step;
    case Kind::kDoubling:
      return std::ldexp(1.0, static_cast<int>(j - 1));  // 2^{j-1}
  }
  throw std::logic_error("unreachable schedule kind");
}

long long strict_log2_cap(long long T) {
  if (T < 2) {
    throw std::invalid_argument("horizon must be >= 2");
  }
  long long lam = static_cast<long long>(
      std::bit_width(static_cast<unsigned long long>(T)) - 1);
  bool exact = (1LL << lam) == T;
  return exact ? lam - 1 : lam;
}

MetaPartition::MetaPartition(PartitionConfig config, int d,
                             std::vector<double> offset, long long start_time)
    : config_(config), d_(d), offset_(std::move(offset)), t_(start_time) {
  if (d < 1) {
    throw std::invalid_argument("partition dimension must be >= 1");
  }
  if (!(config_.query_noise_scale > 0.0) ||
      !(config_.thresh_noise_scale > 0.0)) {
    throw std::invalid_argument("noise scales must be > 0");
  }
  if (offset_.empty()) {
    offset_.assign(static_cast<std::size_t>(d), 0.0);
  }
  if (static_cast<int>(offset_.size()) != d) {
    throw std::invalid_argument("offset width does not match dimension");
  }
  s_ = offset_;
  c_.assign(static_cast<std::size_t>(d), 0);
}

double MetaPartition::current_threshold() const {
  return config_.schedule.threshold(j_);
}

StepEvent MetaPartition::step(const Row& row, const QueryFn& g,
                              ContinualHistogram& H, RandomSource& rng) {
  if (end_time_ != 0) {
    throw std::logic_error("partition already finished");
  }
  if (static_cast<int>(row.size()) != d_) {
    throw std::invalid_argument("row width does not match dimension");
  }
  if (!threshold_drawn_) {
    // The first noisy threshold logically belongs to initialization; later
    // thresholds are drawn as their interval opens.
    ktilde_ = config_.schedule.threshold(1) +
              laplace_sample(config_.thresh_noise_scale, rng);
    threshold_drawn_ = true;
  }
  t_ += 1;
  for (std::size_t i = 0; i < c_.size(); ++i) {
    c_[i] += row[i];
    s_[i] += row[i];
  }
  double mu = laplace_sample(config_.query_noise_scale, rng);
  if (g(s_) + mu > ktilde_ && static_cast<double>(j_) <= config_.cap) {
    closes_.push_back(t_);
    H.insert(c_);
    std::fill(c_.begin(), c_.end(), 0);
    j_ += 1;
    ktilde_ = config_.schedule.threshold(j_) +
              laplace_sample(config_.thresh_noise_scale, rng);
    std::vector<double> cur = H.current();
    for (std::size_t i = 0; i < s_.size(); ++i) {
      s_[i] = cur[i] + offset_[i];
    }
    return StepEvent{true, s_};
  }
  return StepEvent{false, {}};
}

void MetaPartition::finish(long long T) {
  if (T < t_) {
    throw std::invalid_argument("finish time precedes last step");
  }
  // The open interval ends at T; nothing is inserted for it.
  end_time_ = T;
}

StepEvent meta_step(MetaPartition& state, const Row& row, const QueryFn& g,
                    ContinualHistogram& H, RandomSource& rng) {
  return state.step(row, g, H, rng);
}

}  // namespace contdp
