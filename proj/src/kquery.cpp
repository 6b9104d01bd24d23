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

#include "contdp/kquery.hpp"

#include <cmath>
#include <stdexcept>

namespace contdp {
namespace {

void check_kconfig(const QuerySet& queries, int d, long long T) {
  if (queries.queries.empty()) {
    throw std::invalid_argument("query set must be nonempty");
  }
  if (d < 1) {
    throw std::invalid_argument("dimension must be >= 1");
  }
  if (T < 1) {
    throw std::invalid_argument("horizon must be >= 1");
  }
}

// Gaussian threshold-update sigma: variance 18 k ln(4 e^{2 eps/3}/delta) /
// eps^2; ln natural.
double gaussian_update_sigma(int k, double epsilon, double delta) {
  return std::sqrt(18.0 * static_cast<double>(k) *
                   std::log(4.0 * std::exp(2.0 * epsilon / 3.0) / delta)) /
         epsilon;
}

// The Gaussian-calibrated trees run at a tightened delta.
double tree_delta(double epsilon, double delta) {
  return delta / (2.0 * std::exp(2.0 * epsilon / 3.0));
}

}  // namespace

KBankPartition::KBankPartition(KBankConfig config, const QuerySet& queries,
                               int d, std::vector<double> offset,
                               long long start_time)
    : config_(config), queries_(queries), d_(d), offset_(std::move(offset)),
      t_(start_time) {
  if (queries_.queries.empty()) {
    throw std::invalid_argument("query set must be nonempty");
  }
  if (d < 1) {
    throw std::invalid_argument("partition dimension must be >= 1");
  }
  if (!(config_.mu_scale > 0.0) || !(config_.tau_scale > 0.0) ||
      !(config_.update_scale > 0.0)) {
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
  // Thresholds start K above each query's value on the initial histogram.
  thresholds_ = eval_queries(queries_, s_);
  for (double& k : thresholds_) {
    k += config_.K;
  }
  noisy_thresholds_.assign(thresholds_.size(), 0.0);
  out_ = eval_queries(queries_, s_);
}

StepEvent KBankPartition::step(const Row& row, ContinualHistogram& H,
                               RandomSource& rng) {
  if (end_time_ != 0) {
    throw std::logic_error("partition already finished");
  }
  if (static_cast<int>(row.size()) != d_) {
    throw std::invalid_argument("row width does not match dimension");
  }
  if (!initialized_) {
    tau_ = laplace_sample(config_.tau_scale, rng);
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
      noisy_thresholds_[i] = thresholds_[i] + tau_;
    }
    initialized_ = true;
  }
  t_ += 1;
  for (std::size_t i = 0; i < c_.size(); ++i) {
    c_[i] += row[i];
    s_[i] += row[i];
  }
  double mu = laplace_sample(config_.mu_scale, rng);
  std::vector<double> values = eval_queries(queries_, s_);
  bool crossed = false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] + mu > noisy_thresholds_[i]) {
      crossed = true;
      break;
    }
  }
  if (crossed && static_cast<double>(j_) <= config_.cap) {
    closes_.push_back(t_);
    j_ += 1;
    H.insert(c_);
    std::fill(c_.begin(), c_.end(), 0);
    // Private threshold updates, in query order; `values` is g on the raw
    // running histogram at the close.
    int raised = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      double noisy = values[i] +
                     (config_.gaussian_update
                          ? gaussian_sample(config_.update_scale, rng)
                          : laplace_sample(config_.update_scale, rng));
      if (noisy > thresholds_[i] - config_.C) {
        thresholds_[i] += config_.K;
        raised += 1;
      }
    }
    raises_.push_back(raised);
    tau_ = laplace_sample(config_.tau_scale, rng);
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
      noisy_thresholds_[i] = thresholds_[i] + tau_;
    }
    std::vector<double> cur = H.current();
    for (std::size_t i = 0; i < s_.size(); ++i) {
      s_[i] = cur[i] + offset_[i];
    }
    out_ = eval_queries(queries_, s_);
    return StepEvent{true, s_};
  }
  return StepEvent{false, {}};
}

void KBankPartition::finish(long long T) {
  if (T < t_) {
    throw std::invalid_argument("finish time precedes last step");
  }
  end_time_ = T;
}

KQueryMechanism::KQueryMechanism(const Config& config, RandomSource* rng)
    : config_(config), rng_(rng) {
  config_.priv.validate();
  check_kconfig(config_.queries, config_.d, config_.T);
  if (config_.c_max < 1) {
    throw std::invalid_argument("c_max must be >= 1");
  }
  double eps = config_.priv.epsilon;
  double beta = config_.priv.beta;
  int k = config_.queries.k();
  double kcmax = static_cast<double>(k) * static_cast<double>(config_.c_max);
  long long cap_inserts = static_cast<long long>(kcmax);
  KBankConfig bc;
  if (config_.calibration == Calibration::kGaussian) {
    double delta = config_.priv.delta;
    if (delta <= 0.0) {
      throw std::invalid_argument("gaussian calibration needs delta > 0");
    }
    hist_ = std::make_unique<BinaryTreeHistogram>(
        cap_inserts, config_.d, eps / 3.0, tree_delta(eps, delta), rng_);
    // ln natural throughout the (epsilon, delta) calibration.
    double alpha_sv = 12.0 / eps *
                      (std::log(6.0 * kcmax / beta) +
                       std::log(6.0 * static_cast<double>(config_.T) / beta));
    double alpha_u =
        6.0 / eps *
        std::sqrt(static_cast<double>(k) *
                  std::log(12.0 * std::exp(2.0 * eps / 3.0) * kcmax /
                           (beta * delta)));
    C_ = config_.c_override.value_or(alpha_sv + alpha_u);
    bc.gaussian_update = true;
    bc.update_scale = gaussian_update_sigma(k, eps, delta);
  } else {
    hist_ = std::make_unique<BinaryTreeHistogram>(cap_inserts, config_.d,
                                                  eps / 3.0, 0.0, rng_);
    C_ = config_.c_override.value_or(
        18.0 / eps *
        (static_cast<double>(k) * std::log(6.0 * kcmax / beta) +
         std::log(6.0 * static_cast<double>(config_.T) / beta)));
    bc.gaussian_update = false;
    bc.update_scale = 3.0 * static_cast<double>(k) / eps;
  }
  K_ = config_.k_override.value_or(3.0 * (C_ + hist_->err_bound(kcmax, beta)));
  bc.C = C_;
  bc.K = K_;
  bc.mu_scale = 12.0 / eps;
  bc.tau_scale = 6.0 / eps;
  bc.cap = kcmax;
  bank_ = std::make_unique<KBankPartition>(bc, config_.queries, config_.d,
                                           std::vector<double>{});
}

std::vector<double> KQueryMechanism::step(const Row& row) {
  bank_->step(row, *hist_, *rng_);
  return bank_->output();
}

void KQueryMechanism::finish() { bank_->finish(config_.T); }

KModifiedMechanism::KModifiedMechanism(const Config& config, RandomSource* rng)
    : config_(config), rng_(rng) {
  config_.priv.validate();
  check_kconfig(config_.queries, config_.d, config_.T);
  if (config_.t0 < 0 || config_.t0 > config_.T) {
    throw std::invalid_argument("suffix start must lie in [0, T]");
  }
  if (!(config_.delta_bound >= 1.0)) {
    throw std::invalid_argument("growth promise must be >= 1");
  }
  if (config_.s_init.empty()) {
    config_.s_init.assign(static_cast<std::size_t>(config_.d), 0.0);
  }
  if (static_cast<int>(config_.s_init.size()) != config_.d) {
    throw std::invalid_argument("s_init width does not match dimension");
  }
  double eps = config_.priv.epsilon;
  double beta = config_.priv.beta;
  int k = config_.queries.k();
  double kdelta = static_cast<double>(k) * config_.delta_bound;
  long long cap_inserts = static_cast<long long>(std::ceil(kdelta));
  KBankConfig bc;
  if (config_.calibration == Calibration::kGaussian) {
    double delta = config_.priv.delta;
    if (delta <= 0.0) {
      throw std::invalid_argument("gaussian calibration needs delta > 0");
    }
    hist_ = std::make_unique<BinaryTreeHistogram>(
        cap_inserts, config_.d, eps / 3.0, tree_delta(eps, delta), rng_);
    C_ = config_.c_override.value_or(
        12.0 / eps *
        (std::sqrt(static_cast<double>(k) *
                   std::log(12.0 * std::exp(2.0 * eps / 3.0) * kdelta /
                            (beta * delta))) +
         std::log(6.0 * kdelta / beta) +
         std::log(6.0 * static_cast<double>(config_.T) / beta)));
    bc.gaussian_update = true;
    bc.update_scale = gaussian_update_sigma(k, eps, delta);
  } else {
    hist_ = std::make_unique<BinaryTreeHistogram>(cap_inserts, config_.d,
                                                  eps / 3.0, 0.0, rng_);
    C_ = config_.c_override.value_or(
        18.0 / eps *
        (static_cast<double>(k) * std::log(6.0 * kdelta / beta) +
         std::log(6.0 * static_cast<double>(config_.T) / beta)));
    bc.gaussian_update = false;
    bc.update_scale = 3.0 * static_cast<double>(k) / eps;
  }
  K_ = config_.k_override.value_or(
      3.0 * (C_ + hist_->err_bound(kdelta, beta) + config_.alpha_gamma));
  bc.C = C_;
  bc.K = K_;
  bc.mu_scale = 12.0 / eps;
  bc.tau_scale = 6.0 / eps;
  bc.cap = kdelta;
  bank_ = std::make_unique<KBankPartition>(bc, config_.queries, config_.d,
                                           config_.s_init, config_.t0);
}

std::vector<double> KModifiedMechanism::step(const Row& row) {
  bank_->step(row, *hist_, *rng_);
  return bank_->output();
}

void KModifiedMechanism::finish() { bank_->finish(config_.T); }

KTwoLevelMechanism::KTwoLevelMechanism(const Config& config, RandomSource* rng)
    : config_(config), rng_(rng) {
  config_.priv.validate();
  check_kconfig(config_.queries, config_.d, config_.T);
  if (config_.T < 2) {
    throw std::invalid_argument("two-level needs a horizon >= 2");
  }
  double eps = config_.priv.epsilon;
  double beta = config_.priv.beta;
  // L pinned to log2(T), as in the max-sum two-level mechanism.
  double L = std::log2(static_cast<double>(config_.T));
  if (config_.calibration == Calibration::kGaussian) {
    if (config_.priv.delta <= 0.0) {
      throw std::invalid_argument("gaussian calibration needs delta > 0");
    }
    alpha_gamma_ = gaussian_doubling_alpha_gamma(
        config_.d, config_.T, eps, config_.priv.delta, beta, L);
  } else {
    alpha_gamma_ = doubling_alpha_gamma(config_.d, config_.T, eps, beta, L);
  }
  alpha_dm_ = 12.0 / eps * std::log2(3.0 * static_cast<double>(config_.T) /
                                     beta) +
              alpha_gamma_ + L;
  KDoublingMechanism::Config outer;
  outer.d = config_.d;
  outer.T = config_.T;
  outer.priv = config_.priv;
  outer.queries = config_.queries;
  outer.calibration = config_.calibration;
  outer_ = std::make_unique<KDoublingMechanism>(outer, rng_);
  restart_inner(0, std::vector<double>(static_cast<std::size_t>(config_.d),
                                       0.0));
  restarts_ = 0;
  out_ = inner_->output();
}

void KTwoLevelMechanism::restart_inner(long long t,
                                       const std::vector<double>& s) {
  long long j = outer_ ? outer_->partition().interval_index() : 1;
  KModifiedMechanism::Config inner;
  inner.queries = config_.queries;
  inner.d = config_.d;
  inner.T = config_.T;
  inner.t0 = t;
  inner.s_init = s;
  inner.alpha_gamma = alpha_gamma_;
  inner.delta_bound =
      std::ldexp(1.0, static_cast<int>(j - 1)) + 2.0 * alpha_dm_;
  inner.priv = config_.priv;
  inner.calibration = config_.calibration;
  inner_ = std::make_unique<KModifiedMechanism>(inner, rng_);
  restarts_ += 1;
}

std::vector<double> KTwoLevelMechanism::step(const Row& row) {
  std::optional<SegmentReport> seg = outer_->step(row);
  if (seg.has_value()) {
    out_ = eval_queries(config_.queries, seg->histogram);
    restart_inner(seg->close_time, seg->histogram);
    return out_;
  }
  out_ = inner_->step(row);
  return out_;
}

void KTwoLevelMechanism::finish() {
  outer_->finish();
  inner_->finish();
}

}  // namespace contdp
