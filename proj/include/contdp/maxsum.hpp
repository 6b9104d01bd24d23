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

#ifndef CONTDP_MAXSUM_HPP_
#define CONTDP_MAXSUM_HPP_

#include <memory>
#include <optional>
#include <vector>

#include "contdp/cont_histogram.hpp"
#include "contdp/partition.hpp"
#include "contdp/query.hpp"

namespace contdp {

// Which noise family a segmentation mechanism runs on. Pure uses Laplace
// everywhere (delta must be 0 in spirit, and is ignored); Gaussian swaps the
// histogram noise for Gaussians calibrated to (epsilon, delta) and requires
// delta > 0.
enum class Calibration { kPure, kGaussian };

// Calibration constants. log2 unless noted; all match the forms used to set
// the mechanisms' interval gaps.
double maxsum_alpha_mu(double epsilon, long long T, double beta);
double maxsum_alpha_tau(double epsilon, double c_max, double beta);

// High-probability bound on the number of intervals a doubling run opens:
// min{ log2(20 epsilon^-2 d c_max) + 4 log2 log2 (T/beta)
//      + log2 log2 (3 d log2(T)/beta), log2 T }.
double doubling_segment_bound(int d, long long T, double epsilon, double beta,
                              double c_max);

// Gaussian counterpart:
// min{ log2(24 epsilon^-2 d c_max) + 8 log2 log2 (T/beta)
//      + log2 ln(2 e^{epsilon/2}/delta), log2 T }.
double gaussian_doubling_segment_bound(int d, long long T, double epsilon,
                                       double delta, double beta,
                                       double c_max);

// Accumulated histogram-noise bounds after at most L interval closes.
// Pure: (4d/epsilon) sqrt(2L) log2(3 d log2(T)/beta).
double doubling_alpha_gamma(int d, long long T, double epsilon, double beta,
                            double L);
// Gaussian: (2/epsilon) sqrt(L d ln(2 e^{epsilon/2}/delta) log2(3 d log2(T)/beta)).
double gaussian_doubling_alpha_gamma(int d, long long T, double epsilon,
                                     double delta, double beta, double L);

// Continual max-sum release for streams whose final max column sum is
// promised to stay within c_max. An interval partitioner closes when the
// noisy running max crosses an additively growing threshold; closed interval
// counts feed a binary-tree histogram at half the budget, and the output is
// the max over the refreshed noisy histogram (0 before the first close).
class BoundedMaxSum {
 public:
  struct Config {
    int d = 1;
    long long T = 0;
    long long c_max = 0;
    PrivacyParams priv;
    // Testing hook: replaces the calibrated interval gap K.
    std::optional<double> k_override;
  };

  // rng is borrowed and must outlive the mechanism.
  BoundedMaxSum(const Config& config, RandomSource* rng);

  double step(const Row& row);
  void finish();

  double output() const { return out_; }
  double interval_gap() const { return gap_; }
  double alpha_mu() const;
  double alpha_tau() const;
  double err_cmax() const;
  const MetaPartition& partition() const { return *part_; }
  const ContinualHistogram& histogram() const { return *hist_; }

 private:
  Config config_;
  RandomSource* rng_;
  std::unique_ptr<BinaryTreeHistogram> hist_;
  std::unique_ptr<MetaPartition> part_;
  double gap_ = 0.0;
  double out_ = 0.0;
};

// One closed interval: when it closed and the refreshed noisy histogram.
struct SegmentReport {
  long long close_time = 0;
  std::vector<double> histogram;
};

// Threshold-doubling segmentation without a c_max promise. Closes when the
// noisy max over the query set crosses 2^{j-1}; each close adds one fresh
// cumulative noise draw per column to the running histogram. The interval
// index stays strictly below log2(T).
class DoublingMechanism {
 public:
  struct Config {
    int d = 1;
    long long T = 0;
    PrivacyParams priv;
    QuerySet queries;  // empty means {max}
    Calibration calibration = Calibration::kPure;
  };

  DoublingMechanism(const Config& config, RandomSource* rng);

  std::optional<SegmentReport> step(const Row& row);
  void finish();

  // Current per-query estimates, evaluated on the running noisy histogram.
  std::vector<double> answers() const;
  const std::vector<double>& running() const { return part_->running(); }
  const MetaPartition& partition() const { return *part_; }
  const ContinualHistogram& histogram() const { return *hist_; }
  const QuerySet& queries() const { return queries_; }
  long long cap() const { return cap_; }

 private:
  Config config_;
  QuerySet queries_;
  RandomSource* rng_;
  std::unique_ptr<ContinualHistogram> hist_;
  std::unique_ptr<MetaPartition> part_;
  long long cap_ = 0;
};

// Max-sum release over a suffix [t0, T], warm-started from a noisy histogram
// s_init whose exact counterpart it tracks within alpha_gamma, and promised
// to grow by at most delta_bound. Thresholds grow additively from
// max(s_init); interval counts feed a binary-tree histogram at half the
// budget, and outputs add the s_init offset back.
class ModifiedBoundedMaxSum {
 public:
  struct Config {
    int d = 1;
    long long T = 0;
    long long t0 = 0;
    std::vector<double> s_init;  // empty means zeros
    double alpha_gamma = 0.0;
    double delta_bound = 0.0;  // promised max growth over the suffix
    PrivacyParams priv;
    std::optional<double> k_override;
  };

  ModifiedBoundedMaxSum(const Config& config, RandomSource* rng);

  double step(const Row& row);
  void finish();

  double output() const { return out_; }
  double interval_gap() const { return gap_; }
  const MetaPartition& partition() const { return *part_; }
  const ContinualHistogram& histogram() const { return *hist_; }

 private:
  Config config_;
  RandomSource* rng_;
  std::unique_ptr<BinaryTreeHistogram> hist_;
  std::unique_ptr<MetaPartition> part_;
  double gap_ = 0.0;
  double out_ = 0.0;
};

// Unbounded max-sum release: a doubling outer loop fixes the scale, and each
// outer interval runs a fresh warm-started bounded mechanism whose growth
// promise doubles with the interval. Outputs follow the inner mechanism
// between outer closes and the refreshed outer histogram at them. Privacy
// composes over the two levels (reported as 2 epsilon).
class TwoLevelMaxSum {
 public:
  struct Config {
    int d = 1;
    long long T = 0;
    PrivacyParams priv;
  };

  TwoLevelMaxSum(const Config& config, RandomSource* rng);

  double step(const Row& row);
  void finish();

  double output() const { return out_; }
  double alpha_gamma() const { return alpha_gamma_; }
  double alpha_dm() const { return alpha_dm_; }
  const DoublingMechanism& outer() const { return *outer_; }
  const ModifiedBoundedMaxSum& inner() const { return *inner_; }
  long long inner_restarts() const { return restarts_; }

 private:
  void restart_inner(long long t, const std::vector<double>& s);

  Config config_;
  RandomSource* rng_;
  double alpha_gamma_ = 0.0;
  double alpha_dm_ = 0.0;
  std::unique_ptr<DoublingMechanism> outer_;
  std::unique_ptr<ModifiedBoundedMaxSum> inner_;
  long long restarts_ = 0;
  double out_ = 0.0;
};

}  // namespace contdp

#endif  // CONTDP_MAXSUM_HPP_
