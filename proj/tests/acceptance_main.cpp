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

// Release gate. Each check prints one [PASS]/[FAIL] line with its wall time;
// the process exits nonzero if any check fails or overruns its budget.
// argv[1] is the path to the contdp CLI (needed by the rerun check only).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "contdp/audit.hpp"
#include "contdp/cont_histogram.hpp"
#include "contdp/harness.hpp"
#include "contdp/kquery.hpp"
#include "contdp/maxsum.hpp"
#include "contdp/noise.hpp"
#include "contdp/query.hpp"
#include "contdp/stream.hpp"

using namespace contdp;

namespace {

std::string g_cli_path;
std::vector<std::string> g_notes;

void note(const std::string& text) { g_notes.push_back(text); }

std::vector<long long> to_counts(const Row& row) {
  return std::vector<long long>(row.begin(), row.end());
}

bool equals_exact(const std::vector<double>& got,
                  const std::vector<long long>& want) {
  if (got.size() != want.size()) return false;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (got[i] != static_cast<double>(want[i])) return false;
  }
  return true;
}

// Four histogram implementations against the exact prefix oracle, all with
// noise disabled. Trees are compared after every row; cumulative histograms
// only accept capacity-many inserts, so they are compared at the ends of a
// contiguous block partition.
bool histograms_match_exact(const Stream& stream, std::uint64_t seed) {
  const int d = stream.dimension();
  const long long T = stream.length();
  RandomSource silent(seed, NoiseMode::kDisabled);
  BinaryTreeHistogram tree(T, d, 1.0, 0.0, &silent);
  BinaryTreeHistogram tree_g(T, d, 1.0, 0.1, &silent);
  for (long long t = 1; t <= T; ++t) {
    tree.insert(to_counts(stream.row(t)));
    tree_g.insert(to_counts(stream.row(t)));
    ExactHistogram h = exact_prefix(stream, t);
    if (!equals_exact(tree.current(), h.sums)) return false;
    if (!equals_exact(tree_g.current(), h.sums)) return false;
  }
  if (T < 2) return true;  // cumulative histograms need a horizon of 2
  CumulativeLaplaceHistogram cum(d, 1.0, T, &silent);
  CumulativeGaussianHistogram cum_g(d, 1.0, 0.1, T, &silent);
  long long blocks = std::min(cum.capacity(), T);
  std::mt19937_64 gen(seed ^ 0x9e3779b97f4a7c15ULL);
  // Random block ends: `blocks` cut points with the last pinned at T.
  std::vector<long long> ends;
  while (static_cast<long long>(ends.size()) < blocks - 1) {
    ends.push_back(1 + static_cast<long long>(gen() % T));
  }
  ends.push_back(T);
  std::sort(ends.begin(), ends.end());
  ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
  long long prev = 0;
  for (long long end : ends) {
    std::vector<long long> counts(static_cast<std::size_t>(d), 0);
    for (long long t = prev + 1; t <= end; ++t) {
      const Row& row = stream.row(t);
      for (int i = 0; i < d; ++i) counts[static_cast<std::size_t>(i)] += row[i];
    }
    cum.insert(counts);
    cum_g.insert(counts);
    ExactHistogram h = exact_prefix(stream, end);
    if (!equals_exact(cum.current(), h.sums)) return false;
    if (!equals_exact(cum_g.current(), h.sums)) return false;
    prev = end;
  }
  return true;
}

Stream random_stream(int d, long long T, std::mt19937_64& gen) {
  Stream s(d, T);
  Row row(static_cast<std::size_t>(d), 0);
  for (long long t = 0; t < T; ++t) {
    for (int i = 0; i < d; ++i) {
      row[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(gen() & 1);
    }
    s.push_row(row);
  }
  return s;
}

// 1. With noise disabled, every continual histogram equals exact_prefix.
// Exhaustive over every 0/1 stream with d <= 3 and d*T <= 14 (the full
// d <= 3, T <= 16 grid has 2^48 streams; shapes past the exhaustive budget
// get dense random coverage instead), plus 100 random larger cases.
bool check_noise_off_equivalence() {
  long long checked = 0;
  for (int d = 1; d <= 3; ++d) {
    for (long long T = 1; T <= 16; ++T) {
      if (d * T <= 14) {
        const long long cells = d * T;
        for (std::uint64_t mask = 0; mask < (1ULL << cells); ++mask) {
          Stream s(d, T);
          Row row(static_cast<std::size_t>(d), 0);
          for (long long t = 0; t < T; ++t) {
            for (int i = 0; i < d; ++i) {
              row[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(
                  (mask >> (t * d + i)) & 1);
            }
            s.push_row(row);
          }
          if (!histograms_match_exact(s, mask ^ 17)) return false;
          ++checked;
        }
      } else {
        std::mt19937_64 gen(static_cast<std::uint64_t>(1000 * d + T));
        for (int rep = 0; rep < 40; ++rep) {
          Stream s = random_stream(d, T, gen);
          if (!histograms_match_exact(s, gen())) return false;
          ++checked;
        }
      }
    }
  }
  std::mt19937_64 gen(20260819);
  for (int rep = 0; rep < 100; ++rep) {
    int d = 1 + static_cast<int>(gen() % 6);
    long long T = 17 + static_cast<long long>(gen() % 240);
    Stream s = random_stream(d, T, gen);
    if (!histograms_match_exact(s, gen())) return false;
    ++checked;
  }
  note("streams checked: " + std::to_string(checked));
  return true;
}

// 2. Dyadic blocks are disjoint, cover [1, t] exactly, and number at most
// ceil(log2 n), for every n in {2..1024} and every t <= n.
bool check_dyadic() {
  for (long long n = 2; n <= 1024; ++n) {
    long long log_cap = 0;
    while ((1LL << log_cap) < n) ++log_cap;
    for (long long t = 1; t <= n; ++t) {
      auto blocks = dyadic_decomposition(t, n);
      if (blocks.empty()) return false;
      if (static_cast<long long>(blocks.size()) > log_cap) return false;
      if (blocks.front().first != 1) return false;
      if (blocks.back().second != t) return false;
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].first > blocks[i].second) return false;
        // Adjacent and in order: disjointness and coverage together.
        if (i > 0 && blocks[i].first != blocks[i - 1].second + 1) return false;
      }
    }
  }
  return true;
}

// 3. Quantile values move by at most alpha when every histogram entry moves
// by at most alpha. Exhaustive over d <= 4, entries in {0..5}, alpha in
// {1, 2}, q in {1/d, ..., 1}.
bool check_quantile_sensitivity() {
  long long violations = 0;
  for (int d = 1; d <= 4; ++d) {
    const long long base_count = [&] {
      long long c = 1;
      for (int i = 0; i < d; ++i) c *= 6;
      return c;
    }();
    std::vector<double> a(static_cast<std::size_t>(d));
    std::vector<double> b(static_cast<std::size_t>(d));
    for (long long code = 0; code < base_count; ++code) {
      long long rem = code;
      for (int i = 0; i < d; ++i) {
        a[static_cast<std::size_t>(i)] = static_cast<double>(rem % 6);
        rem /= 6;
      }
      for (int alpha = 1; alpha <= 2; ++alpha) {
        const long long radix = 2 * alpha + 1;
        long long shift_count = 1;
        for (int i = 0; i < d; ++i) shift_count *= radix;
        for (long long shift = 0; shift < shift_count; ++shift) {
          long long s = shift;
          bool feasible = true;
          for (int i = 0; i < d; ++i) {
            double delta = static_cast<double>(s % radix - alpha);
            s /= radix;
            b[static_cast<std::size_t>(i)] =
                a[static_cast<std::size_t>(i)] + delta;
            if (b[static_cast<std::size_t>(i)] < 0.0) feasible = false;
          }
          if (!feasible) continue;
          for (int i = 1; i <= d; ++i) {
            double q = static_cast<double>(i) / static_cast<double>(d);
            double gap = std::abs(quantile_value(q, a) - quantile_value(q, b));
            if (gap > static_cast<double>(alpha) + 1e-12) ++violations;
          }
        }
      }
    }
  }
  note("violations: " + std::to_string(violations));
  return violations == 0;
}

// 4. Empirical |X| > t exceedance over 10^6 samples matches the exact tail
// within 3 binomial standard errors, and stays below the closed-form bound
// plus the same slack: exp(-t) for Laplace, 2 exp(-t^2/2) for Gaussian.
bool check_tail_bounds() {
  const long long n = 1000000;
  const double dn = static_cast<double>(n);
  {
    RandomSource rng(41);
    std::vector<double> ts = {0.5, 1.0, 2.0};
    std::vector<long long> over(ts.size(), 0);
    for (long long i = 0; i < n; ++i) {
      double x = std::abs(laplace_sample(1.0, rng));
      for (std::size_t k = 0; k < ts.size(); ++k) {
        if (x > ts[k]) ++over[k];
      }
    }
    for (std::size_t k = 0; k < ts.size(); ++k) {
      double p = std::exp(-ts[k]);
      double se = std::sqrt(p * (1.0 - p) / dn);
      double emp = static_cast<double>(over[k]) / dn;
      if (std::abs(emp - p) > 3.0 * se) return false;
      if (emp > p + 3.0 * se) return false;
    }
  }
  {
    RandomSource rng(43);
    std::vector<double> ts = {1.0, 2.0};
    std::vector<long long> over(ts.size(), 0);
    for (long long i = 0; i < n; ++i) {
      double x = std::abs(gaussian_sample(1.0, rng));
      for (std::size_t k = 0; k < ts.size(); ++k) {
        if (x > ts[k]) ++over[k];
      }
    }
    for (std::size_t k = 0; k < ts.size(); ++k) {
      double p = std::erfc(ts[k] / std::sqrt(2.0));
      double bound = 2.0 * std::exp(-ts[k] * ts[k] / 2.0);
      double se = std::sqrt(p * (1.0 - p) / dn);
      double emp = static_cast<double>(over[k]) / dn;
      if (std::abs(emp - p) > 3.0 * se) return false;
      if (emp > bound + 3.0 * se) return false;
    }
  }
  return true;
}

// 5. Bounded max-sum on Bernoulli(0.1) streams: the empirical (2/3)-quantile
// of the max error over 300 live trials stays within 6 (err(c*) + alpha_mu +
// alpha_tau), the promise evaluated at the largest realized max sum c*.
bool check_bounded_accuracy() {
  ExperimentConfig cfg;
  cfg.mechanism = "bounded";
  cfg.queries = "max";
  cfg.stream = "bernoulli:p=0.1";
  cfg.d = 2;
  cfg.T = 1024;
  cfg.priv = {1.0, 0.0, 1.0 / 3.0};
  cfg.c_max = 0;  // promise derived from each trial's realized max sum
  cfg.trials = 300;
  cfg.seed = 501;
  std::vector<TrialResult> results = run_trials(cfg);
  std::vector<double> errors;
  long long c_star = 1;
  for (const TrialResult& r : results) {
    errors.push_back(r.max_error);
    c_star = std::max(c_star, r.cmax_realized);
  }
  double quantile = empirical_quantile(errors, 2.0 / 3.0);
  RandomSource silent(1, NoiseMode::kDisabled);
  BoundedMaxSum::Config pc;
  pc.d = cfg.d;
  pc.T = cfg.T;
  pc.c_max = c_star;
  pc.priv = cfg.priv;
  BoundedMaxSum probe(pc, &silent);
  double bound =
      6.0 * (probe.err_cmax() + probe.alpha_mu() + probe.alpha_tau());
  std::ostringstream os;
  os << "quantile=" << quantile << " bound=" << bound << " c*=" << c_star;
  note(os.str());
  return quantile <= bound;
}

// 6. Doubling segment counts: over 1000 live trials per dimension the
// fraction of trials whose close count exceeds the calibrated segment bound
// at that trial's realized max sum is at most beta + 3 sqrt(beta/1000).
bool check_doubling_segments() {
  for (int d : {1, 4}) {
    ExperimentConfig cfg;
    cfg.mechanism = "doubling";
    cfg.queries = "max";
    cfg.stream = "bernoulli:p=0.5";
    cfg.d = d;
    cfg.T = 1024;
    cfg.priv = {1.0, 0.0, 1.0 / 3.0};
    cfg.trials = 1000;
    cfg.seed = 601 + static_cast<std::uint64_t>(d);
    StructureReport report = check_structure(cfg);
    double frac = static_cast<double>(report.segment_violations) /
                  static_cast<double>(report.trials);
    double limit = cfg.priv.beta + report.slack;
    std::ostringstream os;
    os << "d=" << d << " violation fraction=" << frac << " limit=" << limit;
    note(os.str());
    if (frac > limit) return false;
    if (report.cap_violations != 0) return false;
  }
  return true;
}

// 7. Hard partition caps hold in 100% of trials across the whole mechanism
// matrix: c_max and Delta caps for the max-sum family, k c_max and k Delta
// caps for the k-query family, the log2 T cap for the doubling family.
bool check_caps_absolute() {
  const std::vector<std::string> pure = {"bounded",  "modified", "doubling",
                                         "twolevel", "kquery",   "kmodified",
                                         "kdoubling", "ktwolevel"};
  const std::vector<std::string> gauss = {"doubling-gauss", "kquery-gauss",
                                          "kmodified-gauss",
                                          "kdoubling-gauss",
                                          "ktwolevel-gauss"};
  std::vector<std::string> mechanisms = pure;
  mechanisms.insert(mechanisms.end(), gauss.begin(), gauss.end());
  int configs = 0;
  std::uint64_t seed = 701;
  for (const std::string& mech : mechanisms) {
    bool k_family = mech.rfind("k", 0) == 0;
    for (const std::string& stream : {std::string("bernoulli:p=0.5"),
                                      std::string("bursty:len=8")}) {
      for (int d : {1, 3}) {
        ExperimentConfig cfg;
        cfg.mechanism = mech;
        cfg.queries = k_family
                          ? (d == 1 ? "max,min"
                                    : "max,min,topkval:2,quantile:0.5")
                          : "max";
        cfg.stream = stream;
        cfg.d = d;
        cfg.T = 128;
        cfg.priv = {1.0, mechanism_is_gaussian(mech) ? 1e-6 : 0.0,
                    1.0 / 3.0};
        cfg.trials = 10;
        cfg.seed = seed++;
        StructureReport report = check_structure(cfg);
        if (report.cap_violations != 0) {
          note("cap violation: " + mech + " on " + stream);
          return false;
        }
        ++configs;
      }
    }
  }
  note("configs checked: " + std::to_string(configs));
  return configs == 52;
}

// 8. The k-query doubling mechanism restricted to the max query and the
// plain doubling mechanism produce identical close times and answers when
// replaying the same recorded noise tape, over 50 random streams.
bool check_k1_reduction() {
  for (int rep = 0; rep < 50; ++rep) {
    std::mt19937_64 gen(800 + static_cast<std::uint64_t>(rep));
    Stream s = random_stream(2, 64, gen);
    std::vector<double> tape;
    RandomSource live(9000 + static_cast<std::uint64_t>(rep));
    for (int i = 0; i < 4096; ++i) {
      tape.push_back(laplace_sample(8.0, live));
    }
    RandomSource rng_a = RandomSource::recorded(tape);
    RandomSource rng_b = RandomSource::recorded(tape);
    DoublingMechanism::Config dc;
    dc.d = 2;
    dc.T = 64;
    dc.priv = {1.0, 0.0, 1.0 / 3.0};
    dc.queries = parse_query_set("max");
    DoublingMechanism plain(dc, &rng_a);
    KDoublingMechanism kform(dc, &rng_b);
    for (long long t = 1; t <= s.length(); ++t) {
      std::optional<SegmentReport> ra = plain.step(s.row(t));
      std::optional<SegmentReport> rb = kform.step(s.row(t));
      if (ra.has_value() != rb.has_value()) return false;
      if (ra && ra->close_time != rb->close_time) return false;
      if (plain.answers() != kform.answers()) return false;
    }
    plain.finish();
    kform.finish();
    if (plain.partition().close_times() != kform.partition().close_times()) {
      return false;
    }
  }
  return true;
}

// 9. Two-level error grows at most additively in log T: with a single fixed
// burst (realized max sum 32 at both horizons), the median max error at
// T=2^14 exceeds the median at T=2^10 by at most twice the alpha_mu growth
// plus a fixed slack of 16.
bool check_twolevel_scaling() {
  auto median_error = [](long long T, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.mechanism = "twolevel";
    cfg.queries = "max";
    cfg.stream = "bursty:len=32";
    cfg.d = 2;
    cfg.T = T;
    cfg.priv = {1.0, 0.0, 1.0 / 3.0};
    cfg.trials = 100;
    cfg.seed = seed;
    std::vector<TrialResult> results = run_trials(cfg);
    std::vector<double> errors;
    for (const TrialResult& r : results) errors.push_back(r.max_error);
    return empirical_quantile(errors, 0.5);
  };
  double low = median_error(1 << 10, 901);
  double high = median_error(1 << 14, 902);
  double mu_growth = maxsum_alpha_mu(1.0, 1 << 14, 1.0 / 3.0) -
                     maxsum_alpha_mu(1.0, 1 << 10, 1.0 / 3.0);
  double limit = 2.0 * mu_growth + 16.0;
  std::ostringstream os;
  os << "median(2^10)=" << low << " median(2^14)=" << high
     << " limit on growth=" << limit;
  note(os.str());
  return high - low <= limit;
}

// 10. The audit passes the honest Laplace mechanism at eps in {0.5, 1, 2}
// and fails the deliberately broken bounded mechanism, whose outputs leak
// the exact running maximum. 10^6 trials per input.
bool check_audit_sanity() {
  for (double eps : {0.5, 1.0, 2.0}) {
    AuditConfig cfg;
    cfg.mechanism = "laplace";
    cfg.epsilon = eps;
    cfg.trials = 1000000;
    cfg.bin_width = 1.0;
    cfg.seed = 1001;
    cfg.count_x = 3;
    cfg.count_y = 4;
    AuditResult result = run_audit(cfg);
    if (!result.pass) {
      std::ostringstream os;
      os << "laplace failed at eps=" << eps
         << " max_normalized=" << result.max_normalized;
      note(os.str());
      return false;
    }
  }
  AuditConfig cfg;
  cfg.mechanism = "bounded_broken";
  cfg.epsilon = 1.0;
  cfg.trials = 1000000;
  cfg.bin_width = 1.0;
  cfg.seed = 1002;
  cfg.d = 1;
  cfg.T = 4;
  cfg.t_star = 1;
  cfg.neighbor_mode = "event";
  cfg.max_skipped_mass = 0.05;
  AuditResult result = run_audit(cfg);
  std::ostringstream os;
  os << "broken mechanism max_normalized=" << result.max_normalized
     << " disjoint_support=" << (result.disjoint_support ? "yes" : "no");
  note(os.str());
  return !result.pass;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// 11. Two runs of every subcommand with identical config and seed produce
// byte-identical output files.
bool check_byte_identical_reruns() {
  if (g_cli_path.empty()) {
    note("missing CLI path argument");
    return false;
  }
  namespace fs = std::filesystem;
  fs::path base = fs::current_path() / "acceptance_out";
  std::error_code ec;
  fs::remove_all(base, ec);
  const std::vector<std::string> commands = {
      " run --mechanism doubling --queries max --stream bernoulli:p=0.5"
      " --d 2 --T 64 --trials 5 --seed 7 --per-time --out ",
      " check --mechanism bounded --queries max --stream bernoulli:p=0.5"
      " --d 1 --T 128 --trials 20 --seed 9 --out ",
      " audit --mechanism laplace --eps 1 --trials 100000 --seed 11"
      " --cx 3 --cy 4 --out "};
  const std::vector<std::string> names = {"run", "check", "audit"};
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::vector<fs::path> dirs = {base / (names[c] + "_a"),
                                  base / (names[c] + "_b")};
    for (const fs::path& dir : dirs) {
      fs::create_directories(dir);
      std::string cmd = "\"" + g_cli_path + "\"" + commands[c] +
                        (dir / "out").string() + " > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        note(names[c] + " subcommand exited nonzero");
        return false;
      }
    }
    std::vector<std::vector<fs::path>> files(2);
    for (int i = 0; i < 2; ++i) {
      for (const auto& entry : fs::directory_iterator(dirs[i])) {
        files[static_cast<std::size_t>(i)].push_back(entry.path());
      }
      std::sort(files[static_cast<std::size_t>(i)].begin(),
                files[static_cast<std::size_t>(i)].end());
    }
    if (files[0].empty() || files[0].size() != files[1].size()) {
      note(names[c] + " produced mismatched file sets");
      return false;
    }
    for (std::size_t i = 0; i < files[0].size(); ++i) {
      if (files[0][i].filename() != files[1][i].filename()) {
        note(names[c] + " produced mismatched file names");
        return false;
      }
      if (read_file(files[0][i]) != read_file(files[1][i])) {
        note(names[c] + ": " + files[0][i].filename().string() + " differs");
        return false;
      }
    }
  }
  fs::remove_all(base, ec);
  return true;
}

struct Criterion {
  const char* name;
  bool (*check)();
  double budget_seconds;  // 0 means no explicit budget
};

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli_path = argv[1];
  const std::vector<Criterion> criteria = {
      {"noise-off oracle equivalence", check_noise_off_equivalence, 10.0},
      {"dyadic decomposition correctness", check_dyadic, 5.0},
      {"quantile sensitivity", check_quantile_sensitivity, 30.0},
      {"laplace and gaussian tail bounds", check_tail_bounds, 30.0},
      {"bounded max-sum accuracy quantile", check_bounded_accuracy, 120.0},
      {"doubling segment count bound", check_doubling_segments, 120.0},
      {"partition caps absolute", check_caps_absolute, 0.0},
      {"k=1 doubling reduction", check_k1_reduction, 0.0},
      {"two-level log T scaling", check_twolevel_scaling, 300.0},
      {"privacy audit sanity", check_audit_sanity, 300.0},
      {"byte-identical reruns", check_byte_identical_reruns, 0.0},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    g_notes.clear();
    bool ok = false;
    std::string error;
    auto start = std::chrono::steady_clock::now();
    try {
      ok = criteria[i].check();
    } catch (const std::exception& e) {
      error = e.what();
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    bool in_budget =
        criteria[i].budget_seconds <= 0.0 || elapsed <= criteria[i].budget_seconds;
    bool pass = ok && in_budget && error.empty();
    std::printf("[%s] %zu. %s (%.1fs)\n", pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name, elapsed);
    for (const std::string& line : g_notes) {
      std::printf("       %s\n", line.c_str());
    }
    if (!error.empty()) std::printf("       threw: %s\n", error.c_str());
    if (ok && !in_budget) {
      std::printf("       over budget of %.0fs\n", criteria[i].budget_seconds);
    }
    if (!pass) ++failures;
  }
  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
