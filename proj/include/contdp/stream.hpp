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

#ifndef CONTDP_STREAM_HPP_
#define CONTDP_STREAM_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "contdp/noise.hpp"

namespace contdp {

// One time step: a 0/1 indicator per column.
using Row = std::vector<std::uint8_t>;

// A binary stream of at most `horizon` rows over `dimension` columns.
// Time is 1-based throughout: row(1) is the first row.
class Stream {
 public:
  Stream(int dimension, long long horizon);

  // Appends one row. Throws if the row width is wrong, an entry is not 0/1,
  // or the stream already holds `horizon` rows.
  void push_row(const Row& row);

  int dimension() const { return dimension_; }
  long long horizon() const { return horizon_; }
  long long length() const { return static_cast<long long>(rows_.size()); }
  const Row& row(long long t) const;  // 1 <= t <= length()

 private:
  int dimension_;
  long long horizon_;
  std::vector<Row> rows_;
};

// Synthetic stream families. Parsed from strings like "bernoulli:p=0.3",
// "bursty:len=32,period=256", "allzero", "hot:i=2".
struct GeneratorSpec {
  enum class Kind { kBernoulli, kBursty, kAllZero, kSingleHotColumn };

  Kind kind = Kind::kAllZero;
  double p = 0.5;            // kBernoulli: per-entry one-probability
  long long burst_len = 1;   // kBursty: leading ones per cycle
  long long burst_period = 0;  // kBursty: cycle length; 0 means one burst only
  int hot_column = 1;        // kSingleHotColumn: the 1-based always-on column
};

GeneratorSpec parse_generator_spec(const std::string& text);
std::string to_string(const GeneratorSpec& spec);

// Generates a full stream of exactly T rows. Deterministic in (spec, seed).
Stream generate(const GeneratorSpec& spec, int d, long long T,
                std::uint64_t seed);

// Exact column sums of the first t rows.
struct ExactHistogram {
  std::vector<long long> sums;
  long long t = 0;
};

// t = 0 yields the all-zero histogram; t > length() is an error.
ExactHistogram exact_prefix(const Stream& stream, long long t);

// Event-level neighbor: same stream with row t_star replaced by new_row.
Stream make_neighbors(const Stream& stream, long long t_star,
                      const Row& new_row);

// Independently-neighboring stream: column i differs from `stream` exactly at
// time flip_times[i] (1-based, one entry per column), where the bit flips.
Stream make_independent_neighbors(const Stream& stream,
                                  const std::vector<long long>& flip_times);

// CSV wire format: first line "d=<d> T=<T>", then one comma-separated 0/1 row
// per line. Readers reject rows beyond T and malformed entries.
void write_stream_csv(const Stream& stream, std::ostream& out);
void write_stream_csv(const Stream& stream, const std::string& path);
Stream read_stream_csv(std::istream& in);
Stream read_stream_csv(const std::string& path);

}  // namespace contdp

#endif  // CONTDP_STREAM_HPP_
