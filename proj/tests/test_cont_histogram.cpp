// Copyright 2026 The contdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "contdp/cont_histogram.hpp"
#include "contdp/noise.hpp"
#include "contdp/stream.hpp"

using namespace contdp;

using Block = std::pair<long long, long long>;

TEST_CASE("dyadic decomposition at hand-computed points") {
  CHECK(dyadic_decomposition(8, 8) == std::vector<Block>{{1, 8}});
  CHECK(dyadic_decomposition(6, 8) == std::vector<Block>{{1, 4}, {5, 6}});
  CHECK(dyadic_decomposition(7, 8) ==
        std::vector<Block>{{1, 4}, {5, 6}, {7, 7}});
  CHECK(dyadic_decomposition(1, 8) == std::vector<Block>{{1, 1}});
  CHECK(dyadic_decomposition(5, 16) == std::vector<Block>{{1, 4}, {5, 5}});
  CHECK_THROWS_AS(dyadic_decomposition(0, 8), std::out_of_range);
  CHECK_THROWS_AS(dyadic_decomposition(9, 8), std::out_of_range);
  CHECK_THROWS_AS(dyadic_decomposition(1, 0), std::invalid_argument);
}

TEST_CASE("dyadic blocks are disjoint, covering, and few") {
  for (long long n : {2LL, 4LL, 16LL, 64LL, 100LL}) {
    long long bound = static_cast<long long>(
        std::ceil(std::log2(static_cast<double>(n))));
    for (long long t = 1; t <= n; ++t) {
      std::vector<Block> blocks = dyadic_decomposition(t, n);
      CHECK(static_cast<long long>(blocks.size()) <= std::max<long long>(bound, 1));
      long long expect = 1;
      for (const Block& b : blocks) {
        CHECK(b.first == expect);
        CHECK(b.second >= b.first);
        long long len = b.second - b.first + 1;
        CHECK((len & (len - 1)) == 0);  // power of two
        // A block of length 2^j starts at an offset divisible by 2^j.
        CHECK((b.first - 1) % len == 0);
        expect = b.second + 1;
      }
      CHECK(expect == t + 1);
    }
  }
}

TEST_CASE("tree node noise scale at frozen points") {
  RandomSource rng(1, NoiseMode::kDisabled);
  BinaryTreeCounter pure(8, 1.0, 0.0, &rng);
  // levels = floor(log2 8) + 1 = 4; Laplace scale levels/epsilon.
  CHECK(pure.node_noise_scale() == doctest::Approx(4.0).epsilon(1e-15));
  BinaryTreeCounter half(8, 2.0, 0.0, &rng);
  CHECK(half.node_noise_scale() == doctest::Approx(2.0).epsilon(1e-15));
  // delta = 1.25 e^-2 makes ln(1.25/delta) = 2, so sigma = sqrt(2*2*4) = 4.
  BinaryTreeCounter gauss(8, 1.0, 1.25 * std::exp(-2.0), &rng);
  CHECK(gauss.node_noise_scale() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("tree counter equals exact sums with noise disabled") {
  RandomSource rng(5, NoiseMode::kDisabled);
  BinaryTreeCounter c(16, 1.0, 0.0, &rng);
  long long total = 0;
  for (long long t = 1; t <= 16; ++t) {
    long long x = (t * 7) % 3;
    c.insert(x);
    total += x;
    CHECK(c.current() == doctest::Approx(static_cast<double>(total)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(c.insert(1), std::out_of_range);
}

TEST_CASE("tree histogram equals exact prefixes with noise disabled") {
  RandomSource rng(6, NoiseMode::kDisabled);
  for (int d = 1; d <= 3; ++d) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      Stream s = generate(parse_generator_spec("bernoulli:p=0.4"), d, 16, seed);
      BinaryTreeHistogram pure(16, d, 1.0, 0.0, &rng);
      BinaryTreeHistogram gauss(16, d, 1.0, 0.1, &rng);
      for (long long t = 1; t <= 16; ++t) {
        std::vector<long long> counts(s.row(t).begin(), s.row(t).end());
        pure.insert(counts);
        gauss.insert(counts);
        ExactHistogram exact = exact_prefix(s, t);
        std::vector<double> got = pure.current();
        std::vector<double> got_g = gauss.current();
        for (int i = 0; i < d; ++i) {
          std::size_t ii = static_cast<std::size_t>(i);
          CHECK(got[ii] == static_cast<double>(exact.sums[ii]));
          CHECK(got_g[ii] == static_cast<double>(exact.sums[ii]));
        }
      }
    }
  }
}

TEST_CASE("recorded tape is consumed in root-to-leaf order") {
  // Capacity 2: nodes are root [1,2] and the two leaves. The first insert
  // draws root then leaf, the second draws only the new leaf.
  RandomSource rng = RandomSource::recorded({10.0, 100.0, 1000.0});
  BinaryTreeCounter c(2, 1.0, 0.0, &rng);
  c.insert(1);
  CHECK(c.current() == doctest::Approx(1.0 + 100.0).epsilon(1e-12));
  c.insert(0);
  CHECK(c.current() == doctest::Approx(1.0 + 10.0).epsilon(1e-12));
  CHECK(rng.replay_cursor() == 3);
}

TEST_CASE("tree histogram error bound at a frozen point") {
  RandomSource rng(1, NoiseMode::kDisabled);
  BinaryTreeHistogram h(16, 4, 1.0, 0.0, &rng);
  // 4/eps * d * log2(n) * log2(6 d n / beta) with d=4, n=16, beta=1/3:
  // 64 * log2(1152).
  CHECK(h.err_bound(16, 1.0 / 3.0) ==
        doctest::Approx(650.875200092308).epsilon(1e-12));
  CHECK_THROWS_AS(h.err_bound(0.5, 1.0 / 3.0), std::invalid_argument);
  CHECK_THROWS_AS(h.err_bound(16, 0.0), std::invalid_argument);
  // Monotone in n.
  CHECK(h.err_bound(8, 1.0 / 3.0) < h.err_bound(16, 1.0 / 3.0));
}

TEST_CASE("tree histogram validates inputs") {
  RandomSource rng(1, NoiseMode::kDisabled);
  CHECK_THROWS_AS(BinaryTreeHistogram(0, 1, 1.0, 0.0, &rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(BinaryTreeHistogram(4, 0, 1.0, 0.0, &rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(BinaryTreeHistogram(4, 1, 0.0, 0.0, &rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(BinaryTreeHistogram(4, 1, 1.0, 1.0, &rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(BinaryTreeHistogram(4, 1, 1.0, 0.0, nullptr),
                  std::invalid_argument);
  BinaryTreeHistogram h(4, 2, 1.0, 0.0, &rng);
  CHECK(h.capacity() == 4);
  CHECK(h.dimension() == 2);
  CHECK_THROWS_AS(h.insert({1}), std::invalid_argument);
  CHECK_THROWS_AS(h.insert({1, -1}), std::invalid_argument);
  CHECK(h.inserts() == 0);
  h.insert({1, 0});
  CHECK(h.inserts() == 1);
}

TEST_CASE("cumulative histograms accumulate exactly with noise disabled") {
  RandomSource rng(7, NoiseMode::kDisabled);
  CumulativeLaplaceHistogram lap(2, 1.0, 16, &rng);
  CumulativeGaussianHistogram gau(2, 1.0, 0.1, 16, &rng);
  CHECK(lap.capacity() == 4);
  CHECK(gau.capacity() == 4);

  Stream s = generate(parse_generator_spec("bernoulli:p=0.5"), 2, 16, 3);
  // Four blocks of four rows; compare at each block boundary.
  for (long long block = 0; block < 4; ++block) {
    std::vector<long long> counts(2, 0);
    for (long long t = 4 * block + 1; t <= 4 * (block + 1); ++t) {
      counts[0] += s.row(t)[0];
      counts[1] += s.row(t)[1];
    }
    lap.insert(counts);
    gau.insert(counts);
    ExactHistogram exact = exact_prefix(s, 4 * (block + 1));
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(lap.current()[i] == static_cast<double>(exact.sums[i]));
      CHECK(gau.current()[i] == static_cast<double>(exact.sums[i]));
    }
  }
  CHECK_THROWS_AS(lap.insert({0, 0}), std::out_of_range);
  CHECK_THROWS_AS(gau.insert({0, 0}), std::out_of_range);
}

TEST_CASE("cumulative laplace scale and error bound at frozen points") {
  RandomSource rng(1, NoiseMode::kDisabled);
  CumulativeLaplaceHistogram h(1, 1.0, 16, &rng);
  // Per-insert Laplace scale 2d/eps.
  CHECK(h.per_insert_scale() == doctest::Approx(2.0).epsilon(1e-15));
  CumulativeLaplaceHistogram h3(3, 2.0, 16, &rng);
  CHECK(h3.per_insert_scale() == doctest::Approx(3.0).epsilon(1e-15));
  // 4d/eps * sqrt(2n) * log2(3 d log2(T) / beta) with d=1, eps=1, T=16,
  // n=2, beta=1/3: 8 * log2(36).
  CHECK(h.err_bound(2, 1.0 / 3.0) ==
        doctest::Approx(41.3594000115385).epsilon(1e-12));
}

TEST_CASE("cumulative gaussian sigma at a frozen point") {
  RandomSource rng(1, NoiseMode::kDisabled);
  CumulativeGaussianHistogram h(2, 1.0, 0.1, 16, &rng);
  // sigma = sqrt(2 d ln(2 e^{eps/2}/delta)) / eps; ln(20)+1/2 = 3.495732...
  CHECK(h.per_insert_sigma() ==
        doctest::Approx(3.7393754952152056).epsilon(1e-12));
  CHECK_THROWS_AS(CumulativeGaussianHistogram(2, 1.0, 0.0, 16, &rng),
                  std::invalid_argument);
  // Gaussian bound grows like sqrt(n), Laplace like sqrt(2n) times a larger
  // log factor; both must be monotone in n.
  CHECK(h.err_bound(2, 1.0 / 3.0) < h.err_bound(4, 1.0 / 3.0));
}

TEST_CASE("live noise stays within the advertised bound most of the time") {
  RandomSource rng(2718);
  int within = 0;
  const int runs = 60;
  for (int r = 0; r < runs; ++r) {
    BinaryTreeHistogram h(16, 1, 1.0, 0.0, &rng);
    Stream s = generate(parse_generator_spec("bernoulli:p=0.5"), 1, 16,
                        static_cast<std::uint64_t>(r + 1));
    double worst = 0.0;
    for (long long t = 1; t <= 16; ++t) {
      h.insert({s.row(t)[0]});
      ExactHistogram exact = exact_prefix(s, t);
      worst = std::max(worst,
                       std::fabs(h.current()[0] -
                                 static_cast<double>(exact.sums[0])));
    }
    if (worst <= h.err_bound(16, 1.0 / 3.0)) within += 1;
  }
  // The bound holds per run with probability at least 2/3; over 60 runs the
  // failure count concentrates well below half.
  CHECK(within >= 50);
}
