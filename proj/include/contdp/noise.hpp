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

#ifndef CONTDP_NOISE_HPP_
#define CONTDP_NOISE_HPP_

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace contdp {

// How a mechanism's noise draws behave. Disabled turns every sample into an
// exact 0 so mechanisms can be compared against exact oracles. Recorded
// replays a fixed tape of reals verbatim and throws on exhaustion, which
// makes close-time traces reproducible across mechanisms.
enum class NoiseMode { kLive, kDisabled, kRecorded };

// Deterministic, splittable randomness source. Identical seeds produce
// identical sequences; children created by split() never share engine state
// with the parent or with siblings.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, NoiseMode mode = NoiseMode::kLive);

  // Source that replays `tape` verbatim, one value per sample call.
  static RandomSource recorded(std::vector<double> tape);

  // Independent child; deterministic in (seed, stream_index).
  RandomSource split(std::uint64_t stream_index) const;

  // Uniform draw strictly inside (0,1). Advances the engine.
  double uniform();

  // Next tape value in Recorded mode. Throws std::runtime_error when the
  // tape is exhausted.
  double replay();

  NoiseMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t replay_cursor() const { return cursor_; }

 private:
  RandomSource(std::uint64_t seed, NoiseMode mode,
               std::shared_ptr<const std::vector<double>> tape);

  std::uint64_t seed_;
  NoiseMode mode_;
  std::mt19937_64 engine_;
  std::shared_ptr<const std::vector<double>> tape_;
  std::size_t cursor_ = 0;
};

// Privacy and failure-probability parameters shared by all mechanisms.
// epsilon > 0, delta in [0,1), beta in (0,1); validate() throws
// std::invalid_argument otherwise.
struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 0.0;
  double beta = 1.0 / 3.0;

  void validate() const;
};

// Inverse-CDF transform of a single uniform u in (0,1) to Laplace(scale):
//   x = -scale * sign(u - 1/2) * ln(1 - 2|u - 1/2|).
// Pure function, exposed so the transform itself is testable.
double laplace_from_uniform(double scale, double u);

// Laplace(scale) sample honoring rng's NoiseMode. scale must be > 0.
double laplace_sample(double scale, RandomSource& rng);

// Box-Muller transform of two uniforms to N(0, sigma^2). Pure function.
double gaussian_from_uniforms(double sigma, double u1, double u2);

// N(0, sigma^2) sample honoring rng's NoiseMode. sigma must be > 0.
double gaussian_sample(double sigma, RandomSource& rng);

// P(|Y| >= t * scale) for Y ~ Laplace(scale): exactly exp(-t) for t >= 0.
double laplace_tail(double t);

// High-probability bound on |sum of k iid Laplace(scale) draws| holding with
// probability at least 1 - beta_s:
//   2 * scale * sqrt(2 ln(2/beta_s)) * max(sqrt(k), sqrt(ln(2/beta_s))).
// k must be >= 1.
double sum_laplace_bound(long long k, double scale, double beta_s);

// Reads one real per line; used to build Recorded sources from sample logs.
std::vector<double> read_sample_log(const std::string& path);

}  // namespace contdp

#endif  // CONTDP_NOISE_HPP_
