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

#include "contdp/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

#include "contdp/harness.hpp"
#include "contdp/maxsum.hpp"
#include "contdp/stream.hpp"
#include "json.hpp"

namespace contdp {
namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string fmt_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Deliberately broken bounded max-sum used as the audit's negative control:
// the per-interval threshold noise is removed and every close publishes the
// exact running maximum, so the output tuple leaks the crossed thresholds.
// Removing tau alone is statistically invisible at these tiny horizons; the
// leak has to reach the outputs for the ratio test to see it.
class BrokenBoundedMaxSum {
 public:
  BrokenBoundedMaxSum(int d, double epsilon, RandomSource* rng)
      : mu_scale_(8.0 / epsilon), rng_(rng),
        sums_(static_cast<std::size_t>(d), 0) {}

  double step(const Row& row) {
    for (std::size_t i = 0; i < sums_.size(); ++i) {
      sums_[i] += row[i];
    }
    long long g = *std::max_element(sums_.begin(), sums_.end());
    double mu = laplace_sample(mu_scale_, *rng_);
    if (static_cast<double>(g) + mu > static_cast<double>(j_)) {
      out_ = static_cast<double>(g);
      j_ += 1;
    }
    return out_;
  }

 private:
  double mu_scale_;
  RandomSource* rng_;
  std::vector<long long> sums_;
  long long j_ = 1;  // thresholds are j * 1 with no noise
  double out_ = 0.0;
};

Stream all_ones_stream(int d, long long T) {
  Stream s(d, T);
  Row row(static_cast<std::size_t>(d), 1);
  for (long long t = 0; t < T; ++t) {
    s.push_row(row);
  }
  return s;
}

std::vector<double> run_laplace(const AuditConfig& cfg, long long count,
                                RandomSource& rng) {
  return {static_cast<double>(count) +
          laplace_sample(1.0 / cfg.epsilon, rng)};
}

std::vector<double> run_bounded(const AuditConfig& cfg, const Stream& stream,
                                RandomSource& rng) {
  BoundedMaxSum::Config mc;
  mc.d = cfg.d;
  mc.T = cfg.T;
  mc.c_max = cfg.T;  // every column sum is at most T
  mc.priv.epsilon = cfg.epsilon;
  mc.priv.delta = cfg.delta;
  // Gap forced to 1 so the tiny instance actually closes intervals; the
  // privacy calibration lives in the noise scales, not in the gap.
  mc.k_override = 1.0;
  BoundedMaxSum mech(mc, &rng);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(stream.length()));
  for (long long t = 1; t <= stream.length(); ++t) {
    out.push_back(mech.step(stream.row(t)));
  }
  mech.finish();
  return out;
}

std::vector<double> run_broken(const AuditConfig& cfg, const Stream& stream,
                               RandomSource& rng) {
  BrokenBoundedMaxSum mech(cfg.d, cfg.epsilon, &rng);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(stream.length()));
  for (long long t = 1; t <= stream.length(); ++t) {
    out.push_back(mech.step(stream.row(t)));
  }
  return out;
}

std::vector<long long> bin_key(const std::vector<double>& output,
                               double width) {
  std::vector<long long> key;
  key.reserve(output.size());
  for (double v : output) {
    key.push_back(static_cast<long long>(std::floor(v / width)));
  }
  return key;
}

std::string key_string(const std::vector<long long>& key) {
  std::string s;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i > 0) s += '|';
    s += std::to_string(key[i]);
  }
  return s;
}

// One-direction ratio (p_a - delta) / p_b with the convention that a
// nonpositive numerator passes outright and a zero denominator against
// positive mass is infinite.
double direction_ratio(double pa, double pb, double delta) {
  double num = pa - delta;
  if (num <= 0.0) return 0.0;
  if (pb <= 0.0) return kInf;
  return num / pb;
}

}  // namespace

void AuditConfig::validate() const {
  if (mechanism != "laplace" && mechanism != "bounded" &&
      mechanism != "bounded_broken") {
    throw std::invalid_argument("unknown audit mechanism '" + mechanism +
                                "'");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be > 0");
  }
  if (delta < 0.0 || delta >= 1.0) {
    throw std::invalid_argument("delta must lie in [0, 1)");
  }
  if (trials < 100000) {
    throw std::invalid_argument("ratio estimation needs at least 1e5 trials");
  }
  if (!(bin_width > 0.0)) {
    throw std::invalid_argument("bin width must be > 0");
  }
  if (mechanism != "laplace") {
    if (d < 1 || d > 2) {
      throw std::invalid_argument("audit streams use d in {1, 2}");
    }
    if (T < 1 || T > 6) {
      throw std::invalid_argument("audit streams use T at most 6");
    }
    if (t_star < 1 || t_star > T) {
      throw std::invalid_argument("t_star must lie in [1, T]");
    }
    if (neighbor_mode != "event" && neighbor_mode != "independent") {
      throw std::invalid_argument("neighbor mode is 'event' or 'independent'");
    }
  }
  if (min_support < 1) {
    throw std::invalid_argument("min_support must be >= 1");
  }
  if (max_skipped_mass < 0.0 || max_skipped_mass >= 1.0) {
    throw std::invalid_argument("max_skipped_mass must lie in [0, 1)");
  }
}

AuditResult run_audit(const AuditConfig& config) {
  config.validate();
  const bool laplace = config.mechanism == "laplace";
  Stream stream_x(1, 1);
  Stream stream_y(1, 1);
  if (!laplace) {
    stream_x = all_ones_stream(config.d, config.T);
    Row zero_row(static_cast<std::size_t>(config.d), 0);
    if (config.neighbor_mode == "event") {
      stream_y = make_neighbors(stream_x, config.t_star, zero_row);
    } else {
      std::vector<long long> flips(static_cast<std::size_t>(config.d),
                                   config.t_star);
      stream_y = make_independent_neighbors(stream_x, flips);
    }
  }

  RandomSource master(config.seed);
  std::map<std::vector<long long>, std::pair<long long, long long>> counts;
  for (long long i = 0; i < config.trials; ++i) {
    RandomSource rng_x = master.split(2 * static_cast<std::uint64_t>(i));
    RandomSource rng_y = master.split(2 * static_cast<std::uint64_t>(i) + 1);
    std::vector<double> out_x, out_y;
    if (laplace) {
      out_x = run_laplace(config, config.count_x, rng_x);
      out_y = run_laplace(config, config.count_y, rng_y);
    } else if (config.mechanism == "bounded") {
      out_x = run_bounded(config, stream_x, rng_x);
      out_y = run_bounded(config, stream_y, rng_y);
    } else {
      out_x = run_broken(config, stream_x, rng_x);
      out_y = run_broken(config, stream_y, rng_y);
    }
    counts[bin_key(out_x, config.bin_width)].first += 1;
    counts[bin_key(out_y, config.bin_width)].second += 1;
  }

  AuditResult result;
  const double n = static_cast<double>(config.trials);
  long long skipped_count = 0;
  for (const auto& [key, c] : counts) {
    AuditBin bin;
    bin.key = key_string(key);
    bin.count_x = c.first;
    bin.count_y = c.second;
    bin.tested = std::max(c.first, c.second) >= config.min_support;
    double px = static_cast<double>(c.first) / n;
    double py = static_cast<double>(c.second) / n;
    bin.ratio_xy = direction_ratio(px, py, config.delta);
    bin.ratio_yx = direction_ratio(py, px, config.delta);
    if (!bin.tested) {
      result.skipped_bins += 1;
      skipped_count += c.first + c.second;
      result.bins.push_back(bin);
      continue;
    }
    result.tested_bins += 1;
    // Relative binomial standard errors; a zero-mass side gets no slack, so
    // a one-sided bin is an infinite ratio unless delta absorbs it.
    double threshold_slack = 0.0;
    if (c.first > 0 && c.second > 0) {
      double se_x = std::sqrt(px * (1.0 - px) / n) / px;
      double se_y = std::sqrt(py * (1.0 - py) / n) / py;
      threshold_slack = 3.0 * (se_x + se_y);
    }
    double limit = std::exp(config.epsilon) * (1.0 + threshold_slack);
    double worst = std::max(bin.ratio_xy, bin.ratio_yx);
    if (std::isinf(worst)) {
      result.disjoint_support = true;
    }
    result.max_ratio = std::max(result.max_ratio, worst);
    result.max_normalized = std::max(result.max_normalized, worst / limit);
    result.bins.push_back(bin);
  }
  result.skipped_mass = static_cast<double>(skipped_count) / (2.0 * n);
  if (result.skipped_mass > config.max_skipped_mass) {
    throw std::runtime_error(
        "insufficient trials: skipped low-support mass " +
        fmt_value(result.skipped_mass) + " exceeds " +
        fmt_value(config.max_skipped_mass));
  }
  result.pass = !result.disjoint_support && result.max_normalized <= 1.0;
  return result;
}

std::string audit_config_json(const AuditConfig& config) {
  json j;
  j["mechanism"] = config.mechanism;
  j["epsilon"] = config.epsilon;
  j["delta"] = config.delta;
  j["trials"] = config.trials;
  j["bin_width"] = config.bin_width;
  j["seed"] = config.seed;
  j["d"] = config.d;
  j["T"] = config.T;
  j["t_star"] = config.t_star;
  j["neighbor_mode"] = config.neighbor_mode;
  j["count_x"] = config.count_x;
  j["count_y"] = config.count_y;
  j["min_support"] = config.min_support;
  j["max_skipped_mass"] = config.max_skipped_mass;
  return j.dump();
}

std::uint64_t audit_config_hash(const AuditConfig& config) {
  return fnv1a64(audit_config_json(config));
}

void write_audit_csv(std::ostream& out, const AuditConfig& config,
                     const AuditResult& result) {
  out << "# config_hash=" << hash_hex(audit_config_hash(config))
      << " seed=" << config.seed << "\n";
  out << "bin,metric,value\n";
  for (const AuditBin& bin : result.bins) {
    out << bin.key << ",count_x," << bin.count_x << "\n";
    out << bin.key << ",count_y," << bin.count_y << "\n";
    out << bin.key << ",ratio_xy," << fmt_value(bin.ratio_xy) << "\n";
    out << bin.key << ",ratio_yx," << fmt_value(bin.ratio_yx) << "\n";
    out << bin.key << ",tested," << (bin.tested ? 1 : 0) << "\n";
  }
}

std::string audit_json(const AuditConfig& config, const AuditResult& result) {
  json j;
  j["config"] = json::parse(audit_config_json(config));
  j["config_hash"] = hash_hex(audit_config_hash(config));
  j["pass"] = result.pass;
  j["disjoint_support"] = result.disjoint_support;
  j["max_ratio"] = std::isfinite(result.max_ratio)
                       ? json(result.max_ratio)
                       : json("inf");
  j["max_normalized"] = std::isfinite(result.max_normalized)
                            ? json(result.max_normalized)
                            : json("inf");
  j["tested_bins"] = result.tested_bins;
  j["skipped_bins"] = result.skipped_bins;
  j["skipped_mass"] = result.skipped_mass;
  j["e_epsilon"] = std::exp(config.epsilon);
  return j.dump(2) + "\n";
}

}  // namespace contdp
