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

#include "contdp/query.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace contdp {
namespace {

// Smallest integer m with m >= x, tolerant of floating error in products
// like (1/3)*3: values within 1e-9 below an integer count as that integer.
long long ceil_with_slack(double x) {
  return static_cast<long long>(std::ceil(x - 1e-9));
}

}  // namespace

Query Query::max_sum() { return Query{Kind::kMaxSum, 1.0, 1, 1}; }

Query Query::min_sum() { return Query{Kind::kMinSum, 1.0, 1, 1}; }

Query Query::quantile(double q) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw std::invalid_argument("quantile q must lie in (0,1]");
  }
  return Query{Kind::kQuantile, q, 1, 1};
}

Query Query::count_column(int i) {
  if (i < 1) {
    throw std::invalid_argument("column index must be >= 1");
  }
  return Query{Kind::kCountColumn, 1.0, i, 1};
}

Query Query::top_k_value(int r) {
  if (r < 1) {
    throw std::invalid_argument("rank must be >= 1");
  }
  return Query{Kind::kTopKValue, 1.0, 1, r};
}

double quantile_value(double q, const std::vector<double>& sums) {
  if (sums.empty()) {
    throw std::invalid_argument("quantile of an empty vector");
  }
  if (!(q > 0.0 && q <= 1.0)) {
    throw std::invalid_argument("quantile q must lie in (0,1]");
  }
  std::vector<double> sorted(sums);
  std::sort(sorted.begin(), sorted.end());
  // In ascending order the j-th value (1-based) has at least j entries <= it,
  // so the answer is the ceil(q*d)-th order statistic.
  long long rank = ceil_with_slack(q * static_cast<double>(sorted.size()));
  rank = std::max<long long>(rank, 1);
  return sorted[static_cast<std::size_t>(rank - 1)];
}

double eval_query(const Query& query, const std::vector<double>& sums) {
  if (sums.empty()) {
    throw std::invalid_argument("query on an empty histogram");
  }
  std::size_t d = sums.size();
  switch (query.kind) {
    case Query::Kind::kMaxSum:
      return quantile_value(1.0, sums);
    case Query::Kind::kMinSum:
      return quantile_value(1.0 / static_cast<double>(d), sums);
    case Query::Kind::kQuantile:
      return quantile_value(query.q, sums);
    case Query::Kind::kCountColumn: {
      if (query.column < 1 || static_cast<std::size_t>(query.column) > d) {
        throw std::out_of_range("count column outside [1, d]");
      }
      return sums[static_cast<std::size_t>(query.column - 1)];
    }
    case Query::Kind::kTopKValue: {
      if (query.rank < 1 || static_cast<std::size_t>(query.rank) > d) {
        throw std::out_of_range("top-k rank outside [1, d]");
      }
      double q = static_cast<double>(d + 1 - static_cast<std::size_t>(query.rank)) /
                 static_cast<double>(d);
      return quantile_value(q, sums);
    }
  }
  throw std::logic_error("unreachable query kind");
}

QuerySet parse_query_set(const std::string& text) {
  QuerySet qs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) {
      continue;
    }
    std::string name = item;
    std::string arg;
    auto colon = item.find(':');
    if (colon != std::string::npos) {
      name = item.substr(0, colon);
      arg = item.substr(colon + 1);
    }
    if (name == "max") {
      qs.queries.push_back(Query::max_sum());
    } else if (name == "min") {
      qs.queries.push_back(Query::min_sum());
    } else if (name == "quantile") {
      qs.queries.push_back(Query::quantile(std::stod(arg)));
    } else if (name == "count") {
      qs.queries.push_back(Query::count_column(std::stoi(arg)));
    } else if (name == "topkval") {
      qs.queries.push_back(Query::top_k_value(std::stoi(arg)));
    } else {
      throw std::invalid_argument("unknown query: " + name);
    }
  }
  if (qs.queries.empty()) {
    throw std::invalid_argument("empty query set");
  }
  return qs;
}

std::string to_string(const QuerySet& qs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < qs.queries.size(); ++i) {
    if (i > 0) {
      out << ",";
    }
    const Query& query = qs.queries[i];
    switch (query.kind) {
      case Query::Kind::kMaxSum:
        out << "max";
        break;
      case Query::Kind::kMinSum:
        out << "min";
        break;
      case Query::Kind::kQuantile:
        out << "quantile:" << query.q;
        break;
      case Query::Kind::kCountColumn:
        out << "count:" << query.column;
        break;
      case Query::Kind::kTopKValue:
        out << "topkval:" << query.rank;
        break;
    }
  }
  return out.str();
}

std::vector<double> eval_queries(const QuerySet& qs,
                                 const std::vector<double>& sums) {
  std::vector<double> out;
  out.reserve(qs.queries.size());
  for (const Query& query : qs.queries) {
    out.push_back(eval_query(query, sums));
  }
  return out;
}

std::vector<int> select_indices(const std::vector<double>& sums, int k) {
  int d = static_cast<int>(sums.size());
  if (k < 1 || k > d) {
    throw std::invalid_argument("select_indices needs 1 <= k <= d");
  }
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 1);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double va = sums[static_cast<std::size_t>(a - 1)];
    double vb = sums[static_cast<std::size_t>(b - 1)];
    if (va != vb) {
      return va > vb;
    }
    return a < b;  // ties toward the lowest index
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

ErrorReport general_error(const std::vector<std::vector<double>>& outputs,
                          const Stream& stream, const QuerySet& qs,
                          double beta) {
  if (static_cast<long long>(outputs.size()) != stream.length()) {
    throw std::invalid_argument("need one output vector per stream row");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must lie in (0,1)");
  }
  ErrorReport report;
  report.per_step.reserve(outputs.size());
  std::vector<double> step_max;
  step_max.reserve(outputs.size());
  std::vector<double> sums(static_cast<std::size_t>(stream.dimension()), 0.0);
  for (long long t = 1; t <= stream.length(); ++t) {
    const Row& row = stream.row(t);
    for (std::size_t i = 0; i < sums.size(); ++i) {
      sums[i] += row[i];
    }
    std::vector<double> truth = eval_queries(qs, sums);
    const std::vector<double>& answer = outputs[static_cast<std::size_t>(t - 1)];
    if (answer.size() != truth.size()) {
      throw std::invalid_argument("output width does not match query set");
    }
    std::vector<double> errs(truth.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      errs[i] = std::fabs(truth[i] - answer[i]);
      worst = std::max(worst, errs[i]);
    }
    report.per_step.push_back(std::move(errs));
    step_max.push_back(worst);
    report.max_abs_error = std::max(report.max_abs_error, worst);
  }
  report.alpha_at_beta = empirical_quantile(step_max, 1.0 - beta);
  return report;
}

double topk_select_error(const std::vector<std::vector<int>>& indices,
                         const Stream& stream, int k) {
  if (static_cast<long long>(indices.size()) != stream.length()) {
    throw std::invalid_argument("need one index list per stream row");
  }
  if (k < 1 || k > stream.dimension()) {
    throw std::invalid_argument("topk_select_error needs 1 <= k <= d");
  }
  double worst = 0.0;
  std::vector<double> sums(static_cast<std::size_t>(stream.dimension()), 0.0);
  for (long long t = 1; t <= stream.length(); ++t) {
    const Row& row = stream.row(t);
    for (std::size_t i = 0; i < sums.size(); ++i) {
      sums[i] += row[i];
    }
    std::vector<double> sorted(sums);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const std::vector<int>& reported = indices[static_cast<std::size_t>(t - 1)];
    if (static_cast<int>(reported.size()) != k) {
      throw std::invalid_argument("index list width does not match k");
    }
    for (int l = 0; l < k; ++l) {
      int j = reported[static_cast<std::size_t>(l)];
      if (j < 1 || j > stream.dimension()) {
        throw std::out_of_range("reported column outside [1, d]");
      }
      double got = sums[static_cast<std::size_t>(j - 1)];
      double want = sorted[static_cast<std::size_t>(l)];
      worst = std::max(worst, std::fabs(got - want));
    }
  }
  return worst;
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("quantile of an empty sample");
  }
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("quantile level must lie in (0,1]");
  }
  std::sort(values.begin(), values.end());
  long long rank = ceil_with_slack(p * static_cast<double>(values.size()));
  rank = std::max<long long>(rank, 1);
  return values[static_cast<std::size_t>(rank - 1)];
}

}  // namespace contdp
