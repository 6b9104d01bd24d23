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

#include "contdp/noise.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace contdp {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, NoiseMode mode)
    : seed_(seed), mode_(mode), engine_(splitmix64(seed)) {
  if (mode_ == NoiseMode::kRecorded) {
    throw std::invalid_argument("recorded sources need a tape; use RandomSource::recorded");
  }
}

RandomSource::RandomSource(std::uint64_t seed, NoiseMode mode,
                           std::shared_ptr<const std::vector<double>> tape)
    : seed_(seed), mode_(mode), engine_(splitmix64(seed)), tape_(std::move(tape)) {}

RandomSource RandomSource::recorded(std::vector<double> tape) {
  return RandomSource(0, NoiseMode::kRecorded,
                      std::make_shared<const std::vector<double>>(std::move(tape)));
}

RandomSource RandomSource::split(std::uint64_t stream_index) const {
  // Child seed depends only on (seed_, stream_index), not on engine state,
  // so splitting is reproducible regardless of draw order.
  std::uint64_t child = splitmix64(seed_ ^ splitmix64(stream_index + 1));
  return RandomSource(child, mode_, tape_);
}

double RandomSource::uniform() {
  // 53 random bits, offset by half an ulp: result lies strictly in (0,1).
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomSource::replay() {
  if (!tape_ || cursor_ >= tape_->size()) {
    throw std::runtime_error("recorded noise tape exhausted");
  }
  return (*tape_)[cursor_++];
}

void PrivacyParams::validate() const {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be > 0");
  }
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in [0,1)");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must lie in (0,1)");
  }
}

double laplace_from_uniform(double scale, double u) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("laplace scale must be > 0");
  }
  if (!(u > 0.0 && u < 1.0)) {
    throw std::invalid_argument("uniform input must lie in (0,1)");
  }
  double centered = u - 0.5;
  double sign = (centered > 0.0) ? 1.0 : (centered < 0.0 ? -1.0 : 0.0);
  return -scale * sign * std::log(1.0 - 2.0 * std::fabs(centered));
}

double laplace_sample(double scale, RandomSource& rng) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("laplace scale must be > 0");
  }
  switch (rng.mode()) {
    case NoiseMode::kDisabled:
      return 0.0;
    case NoiseMode::kRecorded:
      return rng.replay();
    case NoiseMode::kLive:
      break;
  }
  return laplace_from_uniform(scale, rng.uniform());
}

double gaussian_from_uniforms(double sigma, double u1, double u2) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gaussian sigma must be > 0");
  }
  if (!(u1 > 0.0 && u1 < 1.0) || !(u2 > 0.0 && u2 < 1.0)) {
    throw std::invalid_argument("uniform inputs must lie in (0,1)");
  }
  return sigma * std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double gaussian_sample(double sigma, RandomSource& rng) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gaussian sigma must be > 0");
  }
  switch (rng.mode()) {
    case NoiseMode::kDisabled:
      return 0.0;
    case NoiseMode::kRecorded:
      return rng.replay();
    case NoiseMode::kLive:
      break;
  }
  double u1 = rng.uniform();
  double u2 = rng.uniform();
  return gaussian_from_uniforms(sigma, u1, u2);
}

double laplace_tail(double t) {
  if (t < 0.0) {
    throw std::invalid_argument("tail threshold must be >= 0");
  }
  return std::exp(-t);
}

double sum_laplace_bound(long long k, double scale, double beta_s) {
  if (k < 1) {
    throw std::invalid_argument("sum_laplace_bound needs k >= 1");
  }
  if (!(scale > 0.0)) {
    throw std::invalid_argument("laplace scale must be > 0");
  }
  if (!(beta_s > 0.0 && beta_s < 1.0)) {
    throw std::invalid_argument("beta_s must lie in (0,1)");
  }
  // ln here is the natural log; the bound is stated with ln(2/beta_s).
  double l = std::log(2.0 / beta_s);
  double root = std::max(std::sqrt(static_cast<double>(k)), std::sqrt(l));
  return 2.0 * scale * std::sqrt(2.0 * l) * root;
}

std::vector<double> read_sample_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open sample log: " + path);
  }
  std::vector<double> tape;
  double v = 0.0;
  while (in >> v) {
    tape.push_back(v);
  }
  if (!in.eof()) {
    throw std::runtime_error("malformed sample log: " + path);
  }
  return tape;
}

}  // namespace contdp
