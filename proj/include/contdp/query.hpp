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

#ifndef CONTDP_QUERY_HPP_
#define CONTDP_QUERY_HPP_

#include <string>
#include <vector>

#include "contdp/stream.hpp"

namespace contdp {

// Monotone sensitivity-1 histogram queries. All evaluate on a d-vector of
// (possibly noisy, real-valued) column sums. Column indices are 1-based.
struct Query {
  enum class Kind { kMaxSum, kMinSum, kQuantile, kCountColumn, kTopKValue };

  Kind kind = Kind::kMaxSum;
  double q = 1.0;  // kQuantile: q in (0,1]
  int column = 1;  // kCountColumn
  int rank = 1;    // kTopKValue: r-th largest, 1-based

  static Query max_sum();
  static Query min_sum();
  static Query quantile(double q);
  static Query count_column(int i);
  static Query top_k_value(int r);
};

// Smallest value c_j in `sums` such that |{i : c_i <= c_j}| >= q * d.
// q must lie in (0,1]; `sums` must be nonempty.
double quantile_value(double q, const std::vector<double>& sums);

// Evaluates one query on a vector of column sums.
double eval_query(const Query& query, const std::vector<double>& sums);

// An ordered list of queries; evaluated elementwise.
struct QuerySet {
  std::vector<Query> queries;

  int k() const { return static_cast<int>(queries.size()); }
};

// Parses comma-separated query names: "max", "min", "quantile:0.5",
// "count:2", "topkval:3".
QuerySet parse_query_set(const std::string& text);
std::string to_string(const QuerySet& qs);

std::vector<double> eval_queries(const QuerySet& qs,
                                 const std::vector<double>& sums);

// Indices (1-based) of the k largest entries, largest first; ties broken
// toward the lowest index. k > d is an error.
std::vector<int> select_indices(const std::vector<double>& sums, int k);

// Error of a full run of per-step answers against the exact stream oracle.
struct ErrorReport {
  double max_abs_error = 0.0;
  // per_step[t-1][i]: |g_i(h^t) - a_i^t|.
  std::vector<std::vector<double>> per_step;
  // Empirical (1-beta) quantile of the per-step max-over-queries error.
  double alpha_at_beta = 0.0;
};

// `outputs[t-1]` holds the k answers released at time t; outputs must cover
// every queried step of `stream`.
ErrorReport general_error(const std::vector<std::vector<double>>& outputs,
                          const Stream& stream, const QuerySet& qs,
                          double beta);

// Error of reported top-k index lists against the true sums: at each step,
// the l-th reported index is charged |c_{reported_l} - c_{true l-th largest}|
// on the exact sums; the report is the max over steps and positions.
// `indices[t-1]` holds k 1-based column indices.
double topk_select_error(const std::vector<std::vector<int>>& indices,
                         const Stream& stream, int k);

// Empirical p-quantile of a sample: smallest x with
// |{i : v_i <= x}| >= p * n, matching the quantile_value convention.
double empirical_quantile(std::vector<double> values, double p);

}  // namespace contdp

#endif  // CONTDP_QUERY_HPP_
