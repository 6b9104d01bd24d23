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

#include "contdp/maxsum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace contdp {
namespace {

double max_entry(const std::vector<double>& v) {
  return *std::max_element(v.begin(), v.end());
}

QueryFn max_query() {
  return [](const std::vector<double>& s) { return max_entry(s); };
}

QueryFn max_over_queries(const QuerySet& qs) {
  return [&qs](const std::vector<double>& s) {
    double best = eval_query(qs.queries.front(), s);
    for (std::size_t i = 1; i < qs.queries.size(); ++i) {
      best = std::max(best, eval_query(qs.queries[i], s));
    }
    return best;
  };
}

void check_horizon(long long T) {
  if (T < 1) {
    throw std::invalid_argument("horizon must be >= 1");
  }
}

}  // namespace

double maxsum_alpha_mu(double epsilon, long long T, double beta) {
  // log2, matching the printed calibration.
  return 8.0 / epsilon * std::log2(3.0 * static_cast<double>(T) / beta);
}

double maxsum_alpha_tau(double epsilon, double c_max, double beta) {
  return 4.0 / epsilon * std::log2(3.0 * c_max / beta);
}

double doubling_segment_bound(int d, long long T, double epsilon, double beta,
                              double c_max) {
  double dd = static_cast<double>(d);
  double logT = std::log2(static_cast<double>(T));
  double first = std::log2(20.0 / (epsilon * epsilon) * dd * c_max) +
                 4.0 * std::log2(std::log2(static_cast<double>(T) / beta)) +
                 std::log2(std::log2(3.0 * dd * logT / beta));
  return std::min(first, logT);
}

double gaussian_doubling_segment_bound(int d, long long T, double epsilon,
                                       double delta, double beta,
                                       double c_max) {
  double dd = static_cast<double>(d);
  double logT = std::log2(static_cast<double>(T));
  double first = std::log2(24.0 / (epsilon * epsilon) * dd * c_max) +
                 8.0 * std::log2(std::log2(static_cast<double>(T) / beta)) +
                 std::log2(std::log(2.0 * std::exp(epsilon / 2.0) / delta));
  return std::min(first, logT);
}

double doubling_alpha_gamma(int d, long long T, double epsilon, double beta,
                            double L) {
  double dd = static_cast<double>(d);
  double logT = std::log2(static_cast<double>(T));
  return 4.0 * dd / epsilon * std::sqrt(2.0 * L) *
         std::log2(3.0 * dd * logT / beta);
}

double gaussian_doubling_alpha_gamma(int d, long long T, double epsilon,
                                     double delta, double beta, double L) {
  double dd = static_cast<double>(d);
  double logT = std::log2(static_cast<double>(T));
  double lndelta = std::log(2.0 * std::exp(epsilon / 2.0) / delta);
  return 2.0 / epsilon *
         std::sqrt(L * dd * lndelta * std::log2(3.0 * dd * logT / beta));
}

BoundedMaxSum::BoundedMaxSum(const Config& config, RandomSource* rng)
    : config_(config), rng_(rng) {
  config_.priv.validate();
  check_horizon(config_.T);
  if (config_.c_max < 1) {
    throw std::invalid_argument("c_max must be >= 1");
  }
  double eps = config_.priv.epsilon;
  // The histogram runs at half the budget; the comparison and threshold
  // noise carry the other half.
  hist_ = std::make_unique<BinaryTreeHistogram>(
      config_.c_max, config_.d, eps / 2.0, config_.priv.delta, rng_);
  gap_ = config_.k_override.value_or(3.0 * (err_cmax() + alpha_mu() +
                                            alpha_tau()));
  PartitionConfig pc;
  pc.schedule = {ThresholdSchedule::Kind::kAdditive, gap_, 0.0};
  pc.query_noise_scale = 8.0 / eps;
  pc.thresh_noise_scale = 4.0 / eps;
  pc.cap = static_cast<double>(config_.c_max);
  part_ = std::make_unique<MetaPartition>(pc, config_.d,
                                          std::vector<double>{});
}

double BoundedMaxSum::alpha_mu() const {
  return maxsum_alpha_mu(config_.priv.epsilon, config_.T, config_.priv.beta);
}

double BoundedMaxSum::alpha_tau() const {
  return maxsum_alpha_tau(config_.priv.epsilon,
                          static_cast<double>(config_.c_max),
                          config_.priv.beta);
}

double BoundedMaxSum::err_cmax() const {
  return hist_->err_bound(static_cast<double>(config_.c_max),
                          config_.priv.beta);
}

double BoundedMaxSum::step(const Row& row) {
  StepEvent ev = part_->step(row, max_query(), *hist_, *rng_);
  if (ev.closed) {
    out_ = max_entry(ev.histogram);
  }
  return out_;
}

void BoundedMaxSum::finish() { part_->finish(config_.T); }

DoublingMechanism::DoublingMechanism(const Config& config, RandomSource* rng)
    : config_(config), queries_(config.queries), rng_(rng) {
  config_.priv.validate();
  if (config_.T < 2) {
    throw std::invalid_argument("doubling needs a horizon >= 2");
  }
  if (queries_.queries.empty()) {
    queries_.queries.push_back(Query::max_sum());
  }
  double eps = config_.priv.epsilon;
  if (config_.calibration == Calibration::kGaussian) {
    if (config_.priv.delta <= 0.0) {
      throw std::invalid_argument("gaussian calibration needs delta > 0");
    }
    hist_ = std::make_unique<CumulativeGaussianHistogram>(
        config_.d, eps, config_.priv.delta, config_.T, rng_);
  } else {
    hist_ = std::make_unique<CumulativeLaplaceHistogram>(config_.d, eps,
                                                         config_.T, rng_);
  }
  cap_ = strict_log2_cap(config_.T);
  PartitionConfig pc;
  pc.schedule = {ThresholdSchedule::Kind::kDoubling, 0.0, 0.0};
  pc.query_noise_scale = 8.0 / eps;
  pc.thresh_noise_scale = 4.0 / eps;
  pc.cap = static_cast<double>(cap_);
  part_ = std::make_unique<MetaPartition>(pc, config_.d,
                                          std::vector<double>{});
}

std::optional<SegmentReport> DoublingMechanism::step(const Row& row) {
  StepEvent ev = part_->step(row, max_over_queries(queries_), *hist_, *rng_);
  if (ev.closed) {
    return SegmentReport{part_->close_times().back(), std::move(ev.histogram)};
  }
  return std::nullopt;
}

void DoublingMechanism::finish() { part_->finish(config_.T); }

std::vector<double> DoublingMechanism::answers() const {
  return eval_queries(queries_, part_->running());
}

ModifiedBoundedMaxSum::ModifiedBoundedMaxSum(const Config& config,
                                             RandomSource* rng)
    : config_(config), rng_(rng) {
  config_.priv.validate();
  check_horizon(config_.T);
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
  long long cap_inserts =
      static_cast<long long>(std::ceil(config_.delta_bound));
  hist_ = std::make_unique<BinaryTreeHistogram>(
      cap_inserts, config_.d, eps / 2.0, config_.priv.delta, rng_);
  double err = hist_->err_bound(config_.delta_bound, config_.priv.beta);
  gap_ = config_.k_override.value_or(
      3.0 * (config_.alpha_gamma + err +
             maxsum_alpha_mu(eps, config_.T, config_.priv.beta) +
             maxsum_alpha_tau(eps, config_.delta_bound, config_.priv.beta)));
  double base = max_entry(config_.s_init);
  PartitionConfig pc;
  pc.schedule = {ThresholdSchedule::Kind::kAdditive, gap_, base};
  pc.query_noise_scale = 8.0 / eps;
  pc.thresh_noise_scale = 4.0 / eps;
  pc.cap = config_.delta_bound;
  part_ = std::make_unique<MetaPartition>(pc, config_.d, config_.s_init,
                                          config_.t0);
  out_ = base;
}

double ModifiedBoundedMaxSum::step(const Row& row) {
  StepEvent ev = part_->step(row, max_query(), *hist_, *rng_);
  if (ev.closed) {
    out_ = max_entry(ev.histogram);
  }
  return out_;
}

void ModifiedBoundedMaxSum::finish() { part_->finish(config_.T); }

TwoLevelMaxSum::TwoLevelMaxSum(const Config& config, RandomSource* rng)
    : config_(config), rng_(rng) {
  config_.priv.validate();
  if (config_.T < 2) {
    throw std::invalid_argument("two-level needs a horizon >= 2");
  }
  double eps = config_.priv.epsilon;
  double beta = config_.priv.beta;
  // L is pinned to log2(T); the outer interval count never exceeds it.
  double L = std::log2(static_cast<double>(config_.T));
  alpha_gamma_ = doubling_alpha_gamma(config_.d, config_.T, eps, beta, L);
  alpha_dm_ = 12.0 / eps * std::log2(3.0 * static_cast<double>(config_.T) /
                                     beta) +
              alpha_gamma_ + L;
  DoublingMechanism::Config outer;
  outer.d = config_.d;
  outer.T = config_.T;
  outer.priv = config_.priv;
  outer_ = std::make_unique<DoublingMechanism>(outer, rng_);
  restart_inner(0, std::vector<double>(static_cast<std::size_t>(config_.d),
                                       0.0));
  restarts_ = 0;
}

void TwoLevelMaxSum::restart_inner(long long t, const std::vector<double>& s) {
  // The growth promise doubles with the outer interval index.
  long long j = outer_ ? outer_->partition().interval_index() : 1;
  ModifiedBoundedMaxSum::Config inner;
  inner.d = config_.d;
  inner.T = config_.T;
  inner.t0 = t;
  inner.s_init = s;
  inner.alpha_gamma = alpha_gamma_;
  inner.delta_bound =
      std::ldexp(1.0, static_cast<int>(j - 1)) + 2.0 * alpha_dm_;
  inner.priv = config_.priv;
  inner_ = std::make_unique<ModifiedBoundedMaxSum>(inner, rng_);
  restarts_ += 1;
}

double TwoLevelMaxSum::step(const Row& row) {
  std::optional<SegmentReport> seg = outer_->step(row);
  if (seg.has_value()) {
    // Outer close: report its refreshed histogram and warm-start a fresh
    // inner run from it. The closing row is not forwarded to the inner.
    out_ = max_entry(seg->histogram);
    restart_inner(seg->close_time, seg->histogram);
    return out_;
  }
  out_ = inner_->step(row);
  return out_;
}

void TwoLevelMaxSum::finish() {
  outer_->finish();
  inner_->finish();
}

}  // namespace contdp
