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

#ifndef CONTDP_CONT_HISTOGRAM_HPP_
#define CONTDP_CONT_HISTOGRAM_HPP_

#include <memory>
#include <utility>
#include <vector>

#include "contdp/noise.hpp"

namespace contdp {

// Decomposition of [1, t] into maximal dyadic blocks, left to right. The
// blocks are disjoint, cover [1, t] exactly, and there are at most
// ceil(log2(n)) of them. Requires 1 <= t <= n.
std::vector<std::pair<long long, long long>> dyadic_decomposition(long long t,
                                                                  long long n);

// A continually updatable d-column count histogram. Accepts at most
// `capacity` inserts of nonnegative per-column increments; current() returns
// the noisy running totals. With a Disabled noise source the totals are
// exact.
class ContinualHistogram {
 public:
  virtual ~ContinualHistogram() = default;

  virtual void insert(const std::vector<long long>& counts) = 0;
  virtual std::vector<double> current() const = 0;

  // High-probability bound on the max per-column deviation of current() from
  // the exact totals after up to n inserts, holding with probability 1-beta.
  virtual double err_bound(double n, double beta) const = 0;

  virtual int dimension() const = 0;
  virtual long long capacity() const = 0;
  virtual long long inserts() const = 0;
};

// One-column dyadic interval tree over a horizon of n inserts. Each node
// carries a single noise draw: Laplace((floor(log2 n)+1)/epsilon) when
// delta = 0, else N(0, 2 ln(1.25/delta) (floor(log2 n)+1) / epsilon^2).
// Node noise is materialized lazily at first touch, walking root to leaf at
// insert time, so a Recorded source sees one canonical draw order.
class BinaryTreeCounter {
 public:
  // rng is borrowed and must outlive the counter.
  BinaryTreeCounter(long long n, double epsilon, double delta,
                    RandomSource* rng);

  void insert(long long x);
  double current() const;

  // Laplace scale (delta = 0) or Gaussian sigma (delta > 0) per node.
  double node_noise_scale() const { return node_scale_; }
  long long capacity() const { return capacity_; }
  long long inserts() const { return time_; }

 private:
  long long capacity_;
  long long padded_;  // smallest power of two >= capacity_
  double epsilon_;
  double delta_;
  double node_scale_;
  long long time_ = 0;
  RandomSource* rng_;
  std::vector<long long> sums_;       // heap-indexed node totals
  std::vector<double> noise_;         // per-node noise, lazily drawn
  std::vector<std::uint8_t> drawn_;   // materialization flags
};

// d independent per-column trees, each at the full per-instance epsilon.
// err_bound follows the composed form 4/epsilon * d * log2(n) * log2(6dn/beta)
// for delta = 0; for delta > 0 it is the Gaussian tree bound
// 2 sqrt((ln n + ln(1/beta)) ln(1.25/delta)) log2(n) / epsilon.
class BinaryTreeHistogram : public ContinualHistogram {
 public:
  BinaryTreeHistogram(long long n, int d, double epsilon, double delta,
                      RandomSource* rng);

  void insert(const std::vector<long long>& counts) override;
  std::vector<double> current() const override;
  double err_bound(double n, double beta) const override;
  int dimension() const override { return static_cast<int>(trees_.size()); }
  long long capacity() const override;
  long long inserts() const override;

  double node_noise_scale() const { return trees_.front().node_noise_scale(); }

 private:
  double epsilon_;
  double delta_;
  std::vector<BinaryTreeCounter> trees_;
};

// Running totals with one fresh Laplace(2d/epsilon) draw per column per
// insert; the noise accumulates across inserts. Sized for segmentation runs
// over a stream of length T: err_bound(j, beta) after j inserts is
// (4d/epsilon) sqrt(2j) log2(3 d log2(T) / beta).
class CumulativeLaplaceHistogram : public ContinualHistogram {
 public:
  CumulativeLaplaceHistogram(int d, double epsilon, long long T,
                             RandomSource* rng);

  void insert(const std::vector<long long>& counts) override;
  std::vector<double> current() const override;
  double err_bound(double n, double beta) const override;
  int dimension() const override { return d_; }
  long long capacity() const override { return capacity_; }
  long long inserts() const override { return inserts_; }

  double per_insert_scale() const { return scale_; }

 private:
  int d_;
  double epsilon_;
  long long horizon_;
  long long capacity_;
  double scale_;
  long long inserts_ = 0;
  RandomSource* rng_;
  std::vector<double> noisy_;
};

// Gaussian counterpart: one fresh N(0, 2 d ln(2 e^{epsilon/2}/delta) /
// epsilon^2) draw per column per insert. err_bound(j, beta) is
// (2/epsilon) sqrt(j d ln(2 e^{epsilon/2}/delta) log2(3 d log2(T)/beta)).
class CumulativeGaussianHistogram : public ContinualHistogram {
 public:
  CumulativeGaussianHistogram(int d, double epsilon, double delta, long long T,
                              RandomSource* rng);

  void insert(const std::vector<long long>& counts) override;
  std::vector<double> current() const override;
  double err_bound(double n, double beta) const override;
  int dimension() const override { return d_; }
  long long capacity() const override { return capacity_; }
  long long inserts() const override { return inserts_; }

  double per_insert_sigma() const { return sigma_; }

 private:
  int d_;
  double epsilon_;
  double delta_;
  long long horizon_;
  long long capacity_;
  double sigma_;
  long long inserts_ = 0;
  RandomSource* rng_;
  std::vector<double> noisy_;
};

}  // namespace contdp

#endif  // CONTDP_CONT_HISTOGRAM_HPP_
