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

#include "contdp/cont_histogram.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace contdp {
namespace {

long long next_pow2(long long n) {
  return static_cast<long long>(
      std::bit_ceil(static_cast<unsigned long long>(n)));
}

long long floor_log2(long long n) {
  return static_cast<long long>(
      std::bit_width(static_cast<unsigned long long>(n)) - 1);
}

void check_counts(const std::vector<long long>& counts, int d) {
  if (static_cast<int>(counts.size()) != d) {
    throw std::invalid_argument("insert width does not match dimension");
  }
  for (long long c : counts) {
    if (c < 0) {
      throw std::invalid_argument("insert counts must be nonnegative");
    }
  }
}

}  // namespace

std::vector<std::pair<long long, long long>> dyadic_decomposition(long long t,
                                                                  long long n) {
  if (n < 1) {
    throw std::invalid_argument("horizon must be >= 1");
  }
  if (t < 1 || t > n) {
    throw std::out_of_range("time outside [1, n]");
  }
  // Peel off the binary digits of t from the most significant one; each digit
  // 2^i yields the aligned block [a, a + 2^i - 1].
  std::vector<std::pair<long long, long long>> blocks;
  long long a = 1;
  for (long long i = floor_log2(t); i >= 0; --i) {
    long long len = 1LL << i;
    if (t & len) {
      blocks.emplace_back(a, a + len - 1);
      a += len;
    }
  }
  return blocks;
}

BinaryTreeCounter::BinaryTreeCounter(long long n, double epsilon, double delta,
                                     RandomSource* rng)
    : capacity_(n), epsilon_(epsilon), delta_(delta), rng_(rng) {
  if (n < 1) {
    throw std::invalid_argument("tree capacity must be >= 1");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be > 0");
  }
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in [0,1)");
  }
  if (rng == nullptr) {
    throw std::invalid_argument("tree needs a randomness source");
  }
  padded_ = next_pow2(n);
  double levels = static_cast<double>(floor_log2(n) + 1);
  if (delta_ == 0.0) {
    node_scale_ = levels / epsilon_;
  } else {
    // ln is the natural log here.
    node_scale_ = std::sqrt(2.0 * std::log(1.25 / delta_) * levels) / epsilon_;
  }
  sums_.assign(static_cast<std::size_t>(2 * padded_), 0);
  noise_.assign(static_cast<std::size_t>(2 * padded_), 0.0);
  drawn_.assign(static_cast<std::size_t>(2 * padded_), 0);
}

void BinaryTreeCounter::insert(long long x) {
  if (time_ >= capacity_) {
    throw std::out_of_range("tree capacity exhausted");
  }
  if (x < 0) {
    throw std::invalid_argument("insert counts must be nonnegative");
  }
  time_ += 1;
  // Root-to-leaf walk; this fixed order is the canonical draw order under
  // Recorded noise.
  long long leaf = padded_ + time_ - 1;
  int depth = static_cast<int>(floor_log2(leaf));
  for (int level = depth; level >= 0; --level) {
    std::size_t idx = static_cast<std::size_t>(leaf >> level);
    sums_[idx] += x;
    if (!drawn_[idx]) {
      drawn_[idx] = 1;
      if (delta_ == 0.0) {
        noise_[idx] = laplace_sample(node_scale_, *rng_);
      } else {
        noise_[idx] = gaussian_sample(node_scale_, *rng_);
      }
    }
  }
}

double BinaryTreeCounter::current() const {
  if (time_ == 0) {
    return 0.0;
  }
  double total = 0.0;
  for (const auto& [lo, hi] : dyadic_decomposition(time_, padded_)) {
    long long len = hi - lo + 1;
    int level = static_cast<int>(floor_log2(len));
    std::size_t idx = static_cast<std::size_t>((padded_ + lo - 1) >> level);
    if (!drawn_[idx]) {
      // Every block of [1, time_] contains an inserted step, so its noise
      // was materialized on that step's root-to-leaf walk.
      throw std::logic_error("dyadic block missing materialized noise");
    }
    total += static_cast<double>(sums_[idx]) + noise_[idx];
  }
  return total;
}

BinaryTreeHistogram::BinaryTreeHistogram(long long n, int d, double epsilon,
                                         double delta, RandomSource* rng)
    : epsilon_(epsilon), delta_(delta) {
  if (d < 1) {
    throw std::invalid_argument("histogram dimension must be >= 1");
  }
  trees_.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    trees_.emplace_back(n, epsilon, delta, rng);
  }
}

void BinaryTreeHistogram::insert(const std::vector<long long>& counts) {
  check_counts(counts, dimension());
  for (std::size_t i = 0; i < trees_.size(); ++i) {
    trees_[i].insert(counts[i]);
  }
}

std::vector<double> BinaryTreeHistogram::current() const {
  std::vector<double> out;
  out.reserve(trees_.size());
  for (const auto& tree : trees_) {
    out.push_back(tree.current());
  }
  return out;
}

double BinaryTreeHistogram::err_bound(double n, double beta) const {
  if (!(n >= 1.0)) {
    throw std::invalid_argument("err_bound needs n >= 1");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must lie in (0,1)");
  }
  double d = static_cast<double>(dimension());
  if (delta_ == 0.0) {
    // log2 throughout.
    return 4.0 / epsilon_ * d * std::log2(n) *
           std::log2(6.0 * d * n / beta);
  }
  // Gaussian tree bound; ln natural, log2 for the interval count.
  return 2.0 *
         std::sqrt((std::log(n) + std::log(1.0 / beta)) *
                   std::log(1.25 / delta_)) *
         std::log2(n) / epsilon_;
}

long long BinaryTreeHistogram::capacity() const {
  return trees_.front().capacity();
}

long long BinaryTreeHistogram::inserts() const {
  return trees_.front().inserts();
}

CumulativeLaplaceHistogram::CumulativeLaplaceHistogram(int d, double epsilon,
                                                       long long T,
                                                       RandomSource* rng)
    : d_(d), epsilon_(epsilon), horizon_(T), rng_(rng) {
  if (d < 1) {
    throw std::invalid_argument("histogram dimension must be >= 1");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be > 0");
  }
  if (T < 2) {
    throw std::invalid_argument("horizon must be >= 2");
  }
  if (rng == nullptr) {
    throw std::invalid_argument("histogram needs a randomness source");
  }
  scale_ = 2.0 * static_cast<double>(d) / epsilon_;
  capacity_ = static_cast<long long>(std::floor(std::log2(
      static_cast<double>(T))));
  capacity_ = std::max<long long>(capacity_, 1);
  noisy_.assign(static_cast<std::size_t>(d), 0.0);
}

void CumulativeLaplaceHistogram::insert(const std::vector<long long>& counts) {
  if (inserts_ >= capacity_) {
    throw std::out_of_range("cumulative histogram capacity exhausted");
  }
  check_counts(counts, d_);
  inserts_ += 1;
  for (std::size_t i = 0; i < noisy_.size(); ++i) {
    noisy_[i] += static_cast<double>(counts[i]) + laplace_sample(scale_, *rng_);
  }
}

std::vector<double> CumulativeLaplaceHistogram::current() const {
  return noisy_;
}

double CumulativeLaplaceHistogram::err_bound(double n, double beta) const {
  if (!(n >= 1.0)) {
    throw std::invalid_argument("err_bound needs n >= 1");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must lie in (0,1)");
  }
  double d = static_cast<double>(d_);
  double segs = std::log2(static_cast<double>(horizon_));
  // log2 throughout; n is the number of inserts accumulated so far.
  return 4.0 * d / epsilon_ * std::sqrt(2.0 * n) *
         std::log2(3.0 * d * segs / beta);
}

CumulativeGaussianHistogram::CumulativeGaussianHistogram(int d, double epsilon,
                                                         double delta,
                                                         long long T,
                                                         RandomSource* rng)
    : d_(d), epsilon_(epsilon), delta_(delta), horizon_(T), rng_(rng) {
  if (d < 1) {
    throw std::invalid_argument("histogram dimension must be >= 1");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be > 0");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("gaussian histogram needs delta in (0,1)");
  }
  if (T < 2) {
    throw std::invalid_argument("horizon must be >= 2");
  }
  if (rng == nullptr) {
    throw std::invalid_argument("histogram needs a randomness source");
  }
  // ln natural; variance 2 d ln(2 e^{eps/2}/delta) / eps^2.
  sigma_ = std::sqrt(2.0 * static_cast<double>(d) *
                     std::log(2.0 * std::exp(epsilon_ / 2.0) / delta_)) /
           epsilon_;
  capacity_ = static_cast<long long>(std::floor(std::log2(
      static_cast<double>(T))));
  capacity_ = std::max<long long>(capacity_, 1);
  noisy_.assign(static_cast<std::size_t>(d), 0.0);
}

void CumulativeGaussianHistogram::insert(const std::vector<long long>& counts) {
  if (inserts_ >= capacity_) {
    throw std::out_of_range("cumulative histogram capacity exhausted");
  }
  check_counts(counts, d_);
  inserts_ += 1;
  for (std::size_t i = 0; i < noisy_.size(); ++i) {
    noisy_[i] += static_cast<double>(counts[i]) + gaussian_sample(sigma_, *rng_);
  }
}

std::vector<double> CumulativeGaussianHistogram::current() const {
  return noisy_;
}

double CumulativeGaussianHistogram::err_bound(double n, double beta) const {
  if (!(n >= 1.0)) {
    throw std::invalid_argument("err_bound needs n >= 1");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must lie in (0,1)");
  }
  double d = static_cast<double>(d_);
  double segs = std::log2(static_cast<double>(horizon_));
  double lndelta = std::log(2.0 * std::exp(epsilon_ / 2.0) / delta_);
  return 2.0 / epsilon_ *
         std::sqrt(n * d * lndelta * std::log2(3.0 * d * segs / beta));
}

}  // namespace contdp
