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

#ifndef CONTDP_KQUERY_HPP_
#define CONTDP_KQUERY_HPP_

#include <memory>
#include <optional>
#include <vector>

#include "contdp/maxsum.hpp"

namespace contdp {

// Per-query threshold bank driving the k-query mechanisms. One shared
// threshold noise tau covers all k noisy thresholds; a single fresh
// comparison draw per step gates the close; on a close each query's
// threshold is privately tested and raised by K when its noisy value clears
// threshold minus C.
struct KBankConfig {
  double C = 0.0;
  double K = 0.0;
  double mu_scale = 0.0;      // per-step comparison noise
  double tau_scale = 0.0;     // shared threshold noise
  double update_scale = 0.0;  // per-query threshold-update noise
  bool gaussian_update = false;
  double cap = 0.0;  // closes permitted while j <= cap
};

class KBankPartition {
 public:
  KBankPartition(KBankConfig config, const QuerySet& queries, int d,
                 std::vector<double> offset, long long start_time = 0);

  StepEvent step(const Row& row, ContinualHistogram& H, RandomSource& rng);
  void finish(long long T);

  const std::vector<double>& output() const { return out_; }
  const std::vector<double>& running() const { return s_; }
  const std::vector<double>& thresholds() const { return thresholds_; }
  const std::vector<double>& noisy_thresholds() const {
    return noisy_thresholds_;
  }
  double shared_tau() const { return tau_; }
  const std::vector<long long>& close_times() const { return closes_; }
  // raises_[m]: how many thresholds the (m+1)-th close raised.
  const std::vector<int>& raises_per_close() const { return raises_; }
  long long interval_index() const { return j_; }
  long long time() const { return t_; }
  long long end_time() const { return end_time_; }

 private:
  KBankConfig config_;
  QuerySet queries_;
  int d_;
  std::vector<double> offset_;
  std::vector<double> s_;
  std::vector<long long> c_;
  std::vector<double> thresholds_;
  std::vector<double> noisy_thresholds_;
  std::vector<double> out_;
  std::vector<long long> closes_;
  std::vector<int> raises_;
  double tau_ = 0.0;
  long long j_ = 1;
  long long t_ = 0;
  long long end_time_ = 0;
  bool initialized_ = false;
};

// Simultaneous release of k monotone sensitivity-1 queries under a promised
// bound c_max on every query's final value. Per-query thresholds start K
// above the queries' initial values; interval counts feed a binary-tree
// histogram at a third of the budget. Pure calibration uses Laplace
// threshold updates; Gaussian swaps the histogram and update noise for
// Gaussians calibrated to (epsilon, delta) and requires delta > 0.
class KQueryMechanism {
 public:
  struct Config {
    QuerySet queries;
    int d = 1;
    long long T = 0;
    long long c_max = 0;
    PrivacyParams priv;
    Calibration calibration = Calibration::kPure;
    // Testing hooks.
    std::optional<double> c_override;
    std::optional<double> k_override;
  };

  KQueryMechanism(const Config& config, RandomSource* rng);

  std::vector<double> step(const Row& row);
  void finish();

  const std::vector<double>& output() const { return bank_->output(); }
  double margin() const { return C_; }
  double interval_gap() const { return K_; }
  const KBankPartition& bank() const { return *bank_; }
  const ContinualHistogram& histogram() const { return *hist_; }

 private:
  Config config_;
  RandomSource* rng_;
  double C_ = 0.0;
  double K_ = 0.0;
  std::unique_ptr<BinaryTreeHistogram> hist_;
  std::unique_ptr<KBankPartition> bank_;
};

// Suffix k-query release warm-started from a noisy histogram s_init with a
// growth promise delta_bound, mirroring the warm-started max-sum mechanism.
class KModifiedMechanism {
 public:
  struct Config {
    QuerySet queries;
    int d = 1;
    long long T = 0;
    long long t0 = 0;
    std::vector<double> s_init;  // empty means zeros
    double alpha_gamma = 0.0;
    double delta_bound = 0.0;
    PrivacyParams priv;
    Calibration calibration = Calibration::kPure;
    std::optional<double> c_override;
    std::optional<double> k_override;
  };

  KModifiedMechanism(const Config& config, RandomSource* rng);

  std::vector<double> step(const Row& row);
  void finish();

  const std::vector<double>& output() const { return bank_->output(); }
  double margin() const { return C_; }
  double interval_gap() const { return K_; }
  const KBankPartition& bank() const { return *bank_; }
  const ContinualHistogram& histogram() const { return *hist_; }

 private:
  Config config_;
  RandomSource* rng_;
  double C_ = 0.0;
  double K_ = 0.0;
  std::unique_ptr<BinaryTreeHistogram> hist_;
  std::unique_ptr<KBankPartition> bank_;
};

// Doubling segmentation over the max of the query set; identical to the
// max-sum doubling mechanism with g = max_i g_i.
using KDoublingMechanism = DoublingMechanism;

// Unbounded k-query release: doubling outer loop, warm-started suffix
// mechanism per outer interval with a doubling growth promise. Reported as
// 2 epsilon (and 2 delta under the Gaussian calibration).
class KTwoLevelMechanism {
 public:
  struct Config {
    QuerySet queries;
    int d = 1;
    long long T = 0;
    PrivacyParams priv;
    Calibration calibration = Calibration::kPure;
  };

  KTwoLevelMechanism(const Config& config, RandomSource* rng);

  std::vector<double> step(const Row& row);
  void finish();

  const std::vector<double>& output() const { return out_; }
  double alpha_gamma() const { return alpha_gamma_; }
  double alpha_dm() const { return alpha_dm_; }
  const KDoublingMechanism& outer() const { return *outer_; }
  const KModifiedMechanism& inner() const { return *inner_; }
  long long inner_restarts() const { return restarts_; }

 private:
  void restart_inner(long long t, const std::vector<double>& s);

  Config config_;
  RandomSource* rng_;
  double alpha_gamma_ = 0.0;
  double alpha_dm_ = 0.0;
  std::unique_ptr<KDoublingMechanism> outer_;
  std::unique_ptr<KModifiedMechanism> inner_;
  long long restarts_ = 0;
  std::vector<double> out_;
};

}  // namespace contdp

#endif  // CONTDP_KQUERY_HPP_
