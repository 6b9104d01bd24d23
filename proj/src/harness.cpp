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

#include "contdp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace contdp {
namespace {

using nlohmann::json;

const char* kMechanismNames[] = {"bounded",   "modified", "doubling",
                                 "twolevel",  "kquery",   "kmodified",
                                 "kdoubling", "ktwolevel"};
const char* kGaussianCapable[] = {"doubling", "kquery", "kmodified",
                                  "kdoubling", "ktwolevel"};

std::string base_name(const std::string& name) {
  const std::string suffix = "-gauss";
  if (name.size() > suffix.size() &&
      name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return name.substr(0, name.size() - suffix.size());
  }
  return name;
}

std::string fmt_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void require_max_only(const QuerySet& qs, const std::string& mechanism) {
  if (qs.k() != 1 || qs.queries[0].kind != Query::Kind::kMaxSum) {
    throw std::invalid_argument("mechanism '" + mechanism +
                                "' answers only the single query set \"max\"");
  }
}

// Uniform per-trial surface over the mechanism zoo: stepping, close counts,
// the refreshed running histogram, hard caps, and the calibrated bounds the
// structure checks and summaries compare against.
class Runner {
 public:
  virtual ~Runner() = default;

  virtual std::vector<double> step(const Row& row) = 0;
  virtual void finish() = 0;
  virtual long long closes() const = 0;
  virtual std::vector<double> running() const = 0;
  virtual double hard_cap() const = 0;
  virtual double segment_bound(double realized_cmax) const = 0;
  virtual double gap_bound(double realized_cmax) const = 0;
  // Whether the between-close growth claim (true query growth >= 2) applies.
  virtual bool additive_growth() const = 0;
  virtual std::vector<std::pair<std::string, double>> bounds(
      double realized_cmax) const = 0;
};

class BoundedRunner : public Runner {
 public:
  BoundedRunner(const ExperimentConfig& cfg, const QuerySet& qs, long long c,
                RandomSource* rng) {
    require_max_only(qs, cfg.mechanism);
    BoundedMaxSum::Config mc;
    mc.d = cfg.d;
    mc.T = cfg.T;
    mc.c_max = c;
    mc.priv = cfg.priv;
    mech_ = std::make_unique<BoundedMaxSum>(mc, rng);
    cap_ = static_cast<double>(c);
  }

  std::vector<double> step(const Row& row) override {
    return {mech_->step(row)};
  }
  void finish() override { mech_->finish(); }
  long long closes() const override {
    return static_cast<long long>(mech_->partition().close_times().size());
  }
  std::vector<double> running() const override {
    return mech_->partition().running();
  }
  double hard_cap() const override { return cap_; }
  double segment_bound(double) const override { return cap_; }
  double gap_bound(double) const override { return mech_->err_cmax(); }
  bool additive_growth() const override { return true; }
  std::vector<std::pair<std::string, double>> bounds(double) const override {
    double err = mech_->err_cmax();
    double amu = mech_->alpha_mu();
    double atau = mech_->alpha_tau();
    return {{"alpha_mu", amu},
            {"alpha_tau", atau},
            {"err_cmax", err},
            {"interval_gap", mech_->interval_gap()},
            {"accuracy_bound", 6.0 * (err + amu + atau)}};
  }

 private:
  std::unique_ptr<BoundedMaxSum> mech_;
  double cap_ = 0.0;
};

class ModifiedRunner : public Runner {
 public:
  ModifiedRunner(const ExperimentConfig& cfg, const QuerySet& qs, long long c,
                 RandomSource* rng)
      : beta_(cfg.priv.beta) {
    require_max_only(qs, cfg.mechanism);
    ModifiedBoundedMaxSum::Config mc;
    mc.d = cfg.d;
    mc.T = cfg.T;
    mc.delta_bound = static_cast<double>(c);
    mc.priv = cfg.priv;
    mech_ = std::make_unique<ModifiedBoundedMaxSum>(mc, rng);
    cap_ = static_cast<double>(c);
  }

  std::vector<double> step(const Row& row) override {
    return {mech_->step(row)};
  }
  void finish() override { mech_->finish(); }
  long long closes() const override {
    return static_cast<long long>(mech_->partition().close_times().size());
  }
  std::vector<double> running() const override {
    return mech_->partition().running();
  }
  double hard_cap() const override { return cap_; }
  double segment_bound(double) const override { return cap_; }
  double gap_bound(double) const override {
    return mech_->histogram().err_bound(cap_, beta_);
  }
  bool additive_growth() const override { return true; }
  std::vector<std::pair<std::string, double>> bounds(double) const override {
    return {{"interval_gap", mech_->interval_gap()}};
  }

 private:
  std::unique_ptr<ModifiedBoundedMaxSum> mech_;
  double cap_ = 0.0;
  double beta_ = 0.0;
};

class DoublingRunner : public Runner {
 public:
  DoublingRunner(const ExperimentConfig& cfg, const QuerySet& qs,
                 Calibration cal, RandomSource* rng)
      : d_(cfg.d), T_(cfg.T), priv_(cfg.priv), cal_(cal) {
    DoublingMechanism::Config mc;
    mc.d = cfg.d;
    mc.T = cfg.T;
    mc.priv = cfg.priv;
    mc.queries = qs;
    mc.calibration = cal;
    mech_ = std::make_unique<DoublingMechanism>(mc, rng);
  }

  std::vector<double> step(const Row& row) override {
    mech_->step(row);
    return mech_->answers();
  }
  void finish() override { mech_->finish(); }
  long long closes() const override {
    return static_cast<long long>(mech_->partition().close_times().size());
  }
  std::vector<double> running() const override { return mech_->running(); }
  double hard_cap() const override {
    return static_cast<double>(mech_->cap());
  }
  double segment_bound(double realized_cmax) const override {
    double c = std::max(realized_cmax, 1.0);
    return cal_ == Calibration::kGaussian
               ? gaussian_doubling_segment_bound(d_, T_, priv_.epsilon,
                                                 priv_.delta, priv_.beta, c)
               : doubling_segment_bound(d_, T_, priv_.epsilon, priv_.beta, c);
  }
  double gap_bound(double realized_cmax) const override {
    double L = segment_bound(realized_cmax);
    return cal_ == Calibration::kGaussian
               ? gaussian_doubling_alpha_gamma(d_, T_, priv_.epsilon,
                                               priv_.delta, priv_.beta, L)
               : doubling_alpha_gamma(d_, T_, priv_.epsilon, priv_.beta, L);
  }
  bool additive_growth() const override { return false; }
  std::vector<std::pair<std::string, double>> bounds(
      double realized_cmax) const override {
    return {{"segment_bound", segment_bound(realized_cmax)},
            {"alpha_gamma", gap_bound(realized_cmax)},
            {"hard_cap", hard_cap()}};
  }

 private:
  std::unique_ptr<DoublingMechanism> mech_;
  int d_;
  long long T_;
  PrivacyParams priv_;
  Calibration cal_;
};

class TwoLevelRunner : public Runner {
 public:
  TwoLevelRunner(const ExperimentConfig& cfg, const QuerySet& qs,
                 RandomSource* rng)
      : d_(cfg.d), T_(cfg.T), priv_(cfg.priv) {
    require_max_only(qs, cfg.mechanism);
    TwoLevelMaxSum::Config mc;
    mc.d = cfg.d;
    mc.T = cfg.T;
    mc.priv = cfg.priv;
    mech_ = std::make_unique<TwoLevelMaxSum>(mc, rng);
  }

  std::vector<double> step(const Row& row) override {
    return {mech_->step(row)};
  }
  void finish() override { mech_->finish(); }
  long long closes() const override {
    return static_cast<long long>(
        mech_->outer().partition().close_times().size());
  }
  std::vector<double> running() const override {
    return mech_->outer().running();
  }
  double hard_cap() const override {
    return static_cast<double>(strict_log2_cap(T_));
  }
  double segment_bound(double realized_cmax) const override {
    return doubling_segment_bound(d_, T_, priv_.epsilon, priv_.beta,
                                  std::max(realized_cmax, 1.0));
  }
  double gap_bound(double realized_cmax) const override {
    return doubling_alpha_gamma(d_, T_, priv_.epsilon, priv_.beta,
                                segment_bound(realized_cmax));
  }
  bool additive_growth() const override { return false; }
  std::vector<std::pair<std::string, double>> bounds(double) const override {
    return {{"alpha_gamma", mech_->alpha_gamma()},
            {"alpha_dm", mech_->alpha_dm()}};
  }

 private:
  std::unique_ptr<TwoLevelMaxSum> mech_;
  int d_;
  long long T_;
  PrivacyParams priv_;
};

class KQueryRunner : public Runner {
 public:
  KQueryRunner(const ExperimentConfig& cfg, const QuerySet& qs, Calibration cal,
               long long c, RandomSource* rng)
      : beta_(cfg.priv.beta) {
    KQueryMechanism::Config mc;
    mc.queries = qs;
    mc.d = cfg.d;
    mc.T = cfg.T;
    mc.c_max = c;
    mc.priv = cfg.priv;
    mc.calibration = cal;
    mech_ = std::make_unique<KQueryMechanism>(mc, rng);
    cap_ = static_cast<double>(qs.k()) * static_cast<double>(c);
  }

  std::vector<double> step(const Row& row) override {
    return mech_->step(row);
  }
  void finish() override { mech_->finish(); }
  long long closes() const override {
    return static_cast<long long>(mech_->bank().close_times().size());
  }
  std::vector<double> running() const override {
    return mech_->bank().running();
  }
  double hard_cap() const override { return cap_; }
  double segment_bound(double) const override { return cap_; }
  double gap_bound(double) const override {
    return mech_->histogram().err_bound(cap_, beta_);
  }
  bool additive_growth() const override { return true; }
  std::vector<std::pair<std::string, double>> bounds(double) const override {
    return {{"margin", mech_->margin()},
            {"interval_gap", mech_->interval_gap()}};
  }

 private:
  std::unique_ptr<KQueryMechanism> mech_;
  double cap_ = 0.0;
  double beta_ = 0.0;
};

class KModifiedRunner : public Runner {
 public:
  KModifiedRunner(const ExperimentConfig& cfg, const QuerySet& qs,
                  Calibration cal, long long c, RandomSource* rng)
      : beta_(cfg.priv.beta) {
    KModifiedMechanism::Config mc;
    mc.queries = qs;
    mc.d = cfg.d;
    mc.T = cfg.T;
    mc.delta_bound = static_cast<double>(c);
    mc.priv = cfg.priv;
    mc.calibration = cal;
    mech_ = std::make_unique<KModifiedMechanism>(mc, rng);
    cap_ = static_cast<double>(qs.k()) * static_cast<double>(c);
  }

  std::vector<double> step(const Row& row) override {
    return mech_->step(row);
  }
  void finish() override { mech_->finish(); }
  long long closes() const override {
    return static_cast<long long>(mech_->bank().close_times().size());
  }
  std::vector<double> running() const override {
    return mech_->bank().running();
  }
  double hard_cap() const override { return cap_; }
  double segment_bound(double) const override { return cap_; }
  double gap_bound(double) const override {
    return mech_->histogram().err_bound(cap_, beta_);
  }
  bool additive_growth() const override { return true; }
  std::vector<std::pair<std::string, double>> bounds(double) const override {
    return {{"margin", mech_->margin()},
            {"interval_gap", mech_->interval_gap()}};
  }

 private:
  std::unique_ptr<KModifiedMechanism> mech_;
  double cap_ = 0.0;
  double beta_ = 0.0;
};

class KTwoLevelRunner : public Runner {
 public:
  KTwoLevelRunner(const ExperimentConfig& cfg, const QuerySet& qs,
                  Calibration cal, RandomSource* rng)
      : d_(cfg.d), T_(cfg.T), priv_(cfg.priv), cal_(cal) {
    KTwoLevelMechanism::Config mc;
    mc.queries = qs;
    mc.d = cfg.d;
    mc.T = cfg.T;
    mc.priv = cfg.priv;
    mc.calibration = cal;
    mech_ = std::make_unique<KTwoLevelMechanism>(mc, rng);
  }

  std::vector<double> step(const Row& row) override {
    return mech_->step(row);
  }
  void finish() override { mech_->finish(); }
  long long closes() const override {
    return static_cast<long long>(
        mech_->outer().partition().close_times().size());
  }
  std::vector<double> running() const override {
    return mech_->outer().running();
  }
  double hard_cap() const override {
    return static_cast<double>(strict_log2_cap(T_));
  }
  double segment_bound(double realized_cmax) const override {
    double c = std::max(realized_cmax, 1.0);
    return cal_ == Calibration::kGaussian
               ? gaussian_doubling_segment_bound(d_, T_, priv_.epsilon,
                                                 priv_.delta, priv_.beta, c)
               : doubling_segment_bound(d_, T_, priv_.epsilon, priv_.beta, c);
  }
  double gap_bound(double realized_cmax) const override {
    double L = segment_bound(realized_cmax);
    return cal_ == Calibration::kGaussian
               ? gaussian_doubling_alpha_gamma(d_, T_, priv_.epsilon,
                                               priv_.delta, priv_.beta, L)
               : doubling_alpha_gamma(d_, T_, priv_.epsilon, priv_.beta, L);
  }
  bool additive_growth() const override { return false; }
  std::vector<std::pair<std::string, double>> bounds(double) const override {
    return {{"alpha_gamma", mech_->alpha_gamma()},
            {"alpha_dm", mech_->alpha_dm()}};
  }

 private:
  std::unique_ptr<KTwoLevelMechanism> mech_;
  int d_;
  long long T_;
  PrivacyParams priv_;
  Calibration cal_;
};

std::unique_ptr<Runner> make_runner(const ExperimentConfig& cfg,
                                    const QuerySet& qs, long long c_eff,
                                    RandomSource* rng) {
  std::string base = base_name(cfg.mechanism);
  Calibration cal = mechanism_is_gaussian(cfg.mechanism)
                        ? Calibration::kGaussian
                        : Calibration::kPure;
  if (base == "bounded") {
    return std::make_unique<BoundedRunner>(cfg, qs, c_eff, rng);
  }
  if (base == "modified") {
    return std::make_unique<ModifiedRunner>(cfg, qs, c_eff, rng);
  }
  if (base == "doubling" || base == "kdoubling") {
    return std::make_unique<DoublingRunner>(cfg, qs, cal, rng);
  }
  if (base == "twolevel") {
    return std::make_unique<TwoLevelRunner>(cfg, qs, rng);
  }
  if (base == "kquery") {
    return std::make_unique<KQueryRunner>(cfg, qs, cal, c_eff, rng);
  }
  if (base == "kmodified") {
    return std::make_unique<KModifiedRunner>(cfg, qs, cal, c_eff, rng);
  }
  if (base == "ktwolevel") {
    return std::make_unique<KTwoLevelRunner>(cfg, qs, cal, rng);
  }
  throw std::invalid_argument("unknown mechanism '" + cfg.mechanism + "'");
}

// Per-process resolution of the config: parsed queries, the stream source,
// and the Recorded tape, shared read-only across trials.
struct Resolved {
  QuerySet qs;
  GeneratorSpec gen;
  bool from_file = false;
  Stream file_stream{1, 1};
  std::vector<double> tape;
};

Resolved resolve(const ExperimentConfig& cfg) {
  Resolved res;
  res.qs = parse_query_set(cfg.queries.empty() ? "max" : cfg.queries);
  const std::string file_prefix = "file:";
  if (cfg.stream.compare(0, file_prefix.size(), file_prefix) == 0) {
    res.from_file = true;
    res.file_stream = read_stream_csv(cfg.stream.substr(file_prefix.size()));
    if (res.file_stream.dimension() != cfg.d ||
        res.file_stream.horizon() != cfg.T) {
      throw std::invalid_argument(
          "stream file dimensions disagree with the config (file has d=" +
          std::to_string(res.file_stream.dimension()) +
          " T=" + std::to_string(res.file_stream.horizon()) + ")");
    }
  } else {
    res.gen = parse_generator_spec(cfg.stream);
  }
  if (cfg.noise_mode == NoiseMode::kRecorded) {
    res.tape = read_sample_log(cfg.tape_file);
  }
  return res;
}

long long realized_cmax(const Stream& stream, const QuerySet& qs) {
  ExactHistogram h = exact_prefix(stream, stream.length());
  std::vector<double> sums(h.sums.begin(), h.sums.end());
  double m = 0.0;
  for (const Query& q : qs.queries) {
    m = std::max(m, eval_query(q, sums));
  }
  return std::max<long long>(1, static_cast<long long>(std::ceil(m - 1e-9)));
}

RandomSource trial_noise_source(const ExperimentConfig& cfg,
                                const Resolved& res, int trial) {
  RandomSource master(cfg.seed);
  switch (cfg.noise_mode) {
    case NoiseMode::kLive:
      return master.split(2 * static_cast<std::uint64_t>(trial) + 1);
    case NoiseMode::kDisabled:
      return RandomSource(
          master.split(2 * static_cast<std::uint64_t>(trial) + 1).seed(),
          NoiseMode::kDisabled);
    case NoiseMode::kRecorded:
      return RandomSource::recorded(res.tape);
  }
  throw std::logic_error("unreachable noise mode");
}

Stream trial_stream(const ExperimentConfig& cfg, const Resolved& res,
                    int trial) {
  if (res.from_file) {
    return res.file_stream;
  }
  RandomSource master(cfg.seed);
  std::uint64_t stream_seed =
      master.split(2 * static_cast<std::uint64_t>(trial)).seed();
  return generate(res.gen, cfg.d, cfg.T, stream_seed);
}

TrialResult run_one(const ExperimentConfig& cfg, const Resolved& res,
                    int trial) {
  Stream stream = trial_stream(cfg, res, trial);
  RandomSource noise = trial_noise_source(cfg, res, trial);
  long long realized = realized_cmax(stream, res.qs);
  long long c_eff = cfg.c_max > 0 ? cfg.c_max : realized;
  std::unique_ptr<Runner> runner = make_runner(cfg, res.qs, c_eff, &noise);
  std::vector<std::vector<double>> outputs;
  outputs.reserve(static_cast<std::size_t>(stream.length()));
  for (long long t = 1; t <= stream.length(); ++t) {
    outputs.push_back(runner->step(stream.row(t)));
  }
  runner->finish();
  ErrorReport report = general_error(outputs, stream, res.qs, cfg.priv.beta);
  TrialResult result;
  result.trial = trial;
  result.max_error = report.max_abs_error;
  result.alpha_at_beta = report.alpha_at_beta;
  result.closes = runner->closes();
  result.cmax_realized = realized;
  if (cfg.per_time) {
    result.per_step_error.reserve(report.per_step.size());
    for (const std::vector<double>& row : report.per_step) {
      result.per_step_error.push_back(
          *std::max_element(row.begin(), row.end()));
    }
  }
  return result;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

json aggregate(const std::vector<double>& v) {
  return json{{"mean", mean_of(v)},
              {"max", v.empty() ? 0.0 : *std::max_element(v.begin(), v.end())}};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!known_mechanism(mechanism)) {
    throw std::invalid_argument("unknown mechanism '" + mechanism + "'");
  }
  if (d < 1) {
    throw std::invalid_argument("dimension must be >= 1");
  }
  if (T < 1) {
    throw std::invalid_argument("horizon must be >= 1");
  }
  if (trials < 1) {
    throw std::invalid_argument("trials must be >= 1");
  }
  if (c_max < 0) {
    throw std::invalid_argument("c_max must be >= 0");
  }
  priv.validate();
  if (mechanism_is_gaussian(mechanism) && !(priv.delta > 0.0)) {
    throw std::invalid_argument("gaussian mechanisms need delta > 0");
  }
  if (noise_mode == NoiseMode::kRecorded && tape_file.empty()) {
    throw std::invalid_argument("Recorded mode needs a tape file");
  }
}

bool known_mechanism(const std::string& name) {
  std::string base = base_name(name);
  bool gauss = mechanism_is_gaussian(name);
  if (gauss) {
    for (const char* g : kGaussianCapable) {
      if (base == g) return true;
    }
    return false;
  }
  for (const char* m : kMechanismNames) {
    if (base == m) return true;
  }
  return false;
}

bool mechanism_is_gaussian(const std::string& name) {
  const std::string suffix = "-gauss";
  return name.size() > suffix.size() &&
         name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool mechanism_needs_cmax(const std::string& name) {
  std::string base = base_name(name);
  return base == "bounded" || base == "modified" || base == "kquery" ||
         base == "kmodified";
}

NoiseMode parse_noise_mode(const std::string& text) {
  if (text == "live") return NoiseMode::kLive;
  if (text == "disabled") return NoiseMode::kDisabled;
  if (text == "recorded") return NoiseMode::kRecorded;
  throw std::invalid_argument("unknown noise mode '" + text + "'");
}

std::string to_string(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::kLive:
      return "live";
    case NoiseMode::kDisabled:
      return "disabled";
    case NoiseMode::kRecorded:
      return "recorded";
  }
  throw std::logic_error("unreachable noise mode");
}

TrialResult run_single_trial(const ExperimentConfig& config, int trial) {
  config.validate();
  Resolved res = resolve(config);
  return run_one(config, res, trial);
}

std::vector<TrialResult> run_trials_serial(const ExperimentConfig& config) {
  config.validate();
  Resolved res = resolve(config);
  std::vector<TrialResult> out(static_cast<std::size_t>(config.trials));
  for (int t = 0; t < config.trials; ++t) {
    out[static_cast<std::size_t>(t)] = run_one(config, res, t);
  }
  return out;
}

std::vector<TrialResult> run_trials(const ExperimentConfig& config) {
  config.validate();
#ifdef _OPENMP
  if (!config.serial) {
    Resolved res = resolve(config);
    std::vector<TrialResult> out(static_cast<std::size_t>(config.trials));
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < config.trials; ++t) {
      try {
        out[static_cast<std::size_t>(t)] = run_one(config, res, t);
      } catch (...) {
#pragma omp critical
        {
          if (!error) error = std::current_exception();
        }
      }
    }
    if (error) std::rethrow_exception(error);
    return out;
  }
#endif
  return run_trials_serial(config);
}

std::string config_json(const ExperimentConfig& config) {
  json j;
  j["mechanism"] = config.mechanism;
  j["queries"] = config.queries.empty() ? "max" : config.queries;
  j["stream"] = config.stream;
  j["d"] = config.d;
  j["T"] = config.T;
  j["epsilon"] = config.priv.epsilon;
  j["delta"] = config.priv.delta;
  j["beta"] = config.priv.beta;
  j["c_max"] = config.c_max;
  j["trials"] = config.trials;
  j["seed"] = config.seed;
  j["noise_mode"] = to_string(config.noise_mode);
  j["tape_file"] = config.tape_file;
  j["per_time"] = config.per_time;
  return j.dump();
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  return fnv1a64(config_json(config));
}

void write_trials_csv(std::ostream& out, const ExperimentConfig& config,
                      const std::vector<TrialResult>& results) {
  out << "# config_hash=" << hash_hex(config_hash(config))
      << " seed=" << config.seed << "\n";
  out << "trial,t,metric,value\n";
  for (const TrialResult& r : results) {
    out << r.trial << ",,max_error," << fmt_value(r.max_error) << "\n";
    out << r.trial << ",,alpha_at_beta," << fmt_value(r.alpha_at_beta)
        << "\n";
    out << r.trial << ",,closes," << r.closes << "\n";
    out << r.trial << ",,cmax_realized," << r.cmax_realized << "\n";
    for (std::size_t i = 0; i < r.per_step_error.size(); ++i) {
      out << r.trial << "," << (i + 1) << ",error,"
          << fmt_value(r.per_step_error[i]) << "\n";
    }
  }
}

std::string summary_json(const ExperimentConfig& config,
                         const std::vector<TrialResult>& results) {
  std::vector<double> max_errors, alphas, closes;
  long long cmax_max = 1;
  for (const TrialResult& r : results) {
    max_errors.push_back(r.max_error);
    alphas.push_back(r.alpha_at_beta);
    closes.push_back(static_cast<double>(r.closes));
    cmax_max = std::max(cmax_max, r.cmax_realized);
  }
  json j;
  j["config"] = json::parse(config_json(config));
  j["config_hash"] = hash_hex(config_hash(config));
  json res;
  res["trials"] = results.size();
  res["max_error"] = aggregate(max_errors);
  res["max_error"]["quantile_at_1_minus_beta"] =
      empirical_quantile(max_errors, 1.0 - config.priv.beta);
  res["alpha_at_beta"] = aggregate(alphas);
  res["closes"] = aggregate(closes);
  res["cmax_realized_max"] = cmax_max;
  j["results"] = res;
  // Calibrated bounds from a noise-free instance at the effective promise.
  long long c_eff = config.c_max > 0 ? config.c_max : cmax_max;
  RandomSource silent(config.seed, NoiseMode::kDisabled);
  QuerySet qs = parse_query_set(config.queries.empty() ? "max"
                                                       : config.queries);
  std::unique_ptr<Runner> probe = make_runner(config, qs, c_eff, &silent);
  json bounds;
  for (const auto& [name, value] : probe->bounds(
           static_cast<double>(cmax_max))) {
    bounds[name] = value;
  }
  j["bounds"] = bounds;
  return j.dump(2) + "\n";
}

void write_plot_dat(std::ostream& out, const ExperimentConfig& config,
                    const std::vector<TrialResult>& results) {
  out << "# config_hash=" << hash_hex(config_hash(config))
      << " seed=" << config.seed << "\n";
  out << "# trial max_error alpha_at_beta closes cmax_realized\n";
  for (const TrialResult& r : results) {
    out << r.trial << " " << fmt_value(r.max_error) << " "
        << fmt_value(r.alpha_at_beta) << " " << r.closes << " "
        << r.cmax_realized << "\n";
  }
}

std::vector<std::string> write_result_files(
    const ExperimentConfig& config, const std::vector<TrialResult>& results,
    const std::string& prefix) {
  std::filesystem::path p(prefix);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
  std::vector<std::string> paths;
  {
    std::ofstream f(prefix + ".csv");
    if (!f) throw std::runtime_error("cannot write " + prefix + ".csv");
    write_trials_csv(f, config, results);
    paths.push_back(prefix + ".csv");
  }
  {
    std::ofstream f(prefix + ".json");
    if (!f) throw std::runtime_error("cannot write " + prefix + ".json");
    f << summary_json(config, results);
    paths.push_back(prefix + ".json");
  }
  {
    std::ofstream f(prefix + ".dat");
    if (!f) throw std::runtime_error("cannot write " + prefix + ".dat");
    write_plot_dat(f, config, results);
    paths.push_back(prefix + ".dat");
  }
  return paths;
}

StructureReport check_structure(const ExperimentConfig& config) {
  config.validate();
  Resolved res = resolve(config);
  StructureReport report;
  report.trials = config.trials;
  report.slack =
      3.0 * std::sqrt(config.priv.beta / static_cast<double>(config.trials));
  double max_realized = 1.0;
  for (int trial = 0; trial < config.trials; ++trial) {
    Stream stream = trial_stream(config, res, trial);
    RandomSource noise = trial_noise_source(config, res, trial);
    long long realized = realized_cmax(stream, res.qs);
    long long c_eff = config.c_max > 0 ? config.c_max : realized;
    std::unique_ptr<Runner> runner =
        make_runner(config, res.qs, c_eff, &noise);
    std::vector<long long> close_steps;
    std::vector<double> gaps;
    long long seen = 0;
    for (long long t = 1; t <= stream.length(); ++t) {
      runner->step(stream.row(t));
      if (runner->closes() > seen) {
        seen = runner->closes();
        std::vector<double> s = runner->running();
        ExactHistogram h = exact_prefix(stream, t);
        double gap = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
          gap = std::max(gap,
                         std::abs(s[i] - static_cast<double>(h.sums[i])));
        }
        close_steps.push_back(t);
        gaps.push_back(gap);
      }
    }
    runner->finish();
    StructureTrial st;
    st.trial = trial;
    st.closes = seen;
    st.cmax_realized = realized;
    st.max_gap = gaps.empty() ? 0.0 : *std::max_element(gaps.begin(), gaps.end());
    double realized_d = static_cast<double>(realized);
    max_realized = std::max(max_realized, realized_d);
    st.cap_violation =
        static_cast<double>(seen) > runner->hard_cap() + 1e-9;
    st.segment_violation =
        static_cast<double>(seen) > runner->segment_bound(realized_d) + 1e-9;
    st.gap_violation = st.max_gap > runner->gap_bound(realized_d) + 1e-9;
    if (runner->additive_growth() && close_steps.size() >= 2) {
      double min_growth = std::numeric_limits<double>::infinity();
      std::vector<double> prev;
      for (std::size_t m = 0; m < close_steps.size(); ++m) {
        ExactHistogram h = exact_prefix(stream, close_steps[m]);
        std::vector<double> sums(h.sums.begin(), h.sums.end());
        std::vector<double> vals = eval_queries(res.qs, sums);
        if (m > 0) {
          double growth = -std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i < vals.size(); ++i) {
            growth = std::max(growth, vals[i] - prev[i]);
          }
          min_growth = std::min(min_growth, growth);
        }
        prev = vals;
      }
      st.min_growth = min_growth;
      st.growth_violation = min_growth < 2.0 - 1e-9;
    }
    report.segment_violations += st.segment_violation ? 1 : 0;
    report.gap_violations += st.gap_violation ? 1 : 0;
    report.cap_violations += st.cap_violation ? 1 : 0;
    report.growth_violations += st.growth_violation ? 1 : 0;
    report.per_trial.push_back(st);
  }
  {
    RandomSource silent(config.seed, NoiseMode::kDisabled);
    long long c_eff = config.c_max > 0
                          ? config.c_max
                          : static_cast<long long>(max_realized);
    std::unique_ptr<Runner> probe =
        make_runner(config, res.qs, c_eff, &silent);
    report.segment_bound = probe->segment_bound(max_realized);
    report.gap_bound = probe->gap_bound(max_realized);
  }
  double n = static_cast<double>(config.trials);
  double limit = config.priv.beta + report.slack;
  report.pass = report.cap_violations == 0 &&
                report.segment_violations / n <= limit &&
                report.gap_violations / n <= limit &&
                report.growth_violations / n <= limit;
  return report;
}

void write_structure_csv(std::ostream& out, const ExperimentConfig& config,
                         const StructureReport& report) {
  out << "# config_hash=" << hash_hex(config_hash(config))
      << " seed=" << config.seed << "\n";
  out << "trial,t,metric,value\n";
  for (const StructureTrial& st : report.per_trial) {
    out << st.trial << ",,closes," << st.closes << "\n";
    out << st.trial << ",,cmax_realized," << st.cmax_realized << "\n";
    out << st.trial << ",,max_gap," << fmt_value(st.max_gap) << "\n";
    out << st.trial << ",,min_growth," << fmt_value(st.min_growth) << "\n";
    out << st.trial << ",,segment_violation," << (st.segment_violation ? 1 : 0)
        << "\n";
    out << st.trial << ",,gap_violation," << (st.gap_violation ? 1 : 0)
        << "\n";
    out << st.trial << ",,cap_violation," << (st.cap_violation ? 1 : 0)
        << "\n";
    out << st.trial << ",,growth_violation," << (st.growth_violation ? 1 : 0)
        << "\n";
  }
}

std::string structure_json(const ExperimentConfig& config,
                           const StructureReport& report) {
  json j;
  j["config"] = json::parse(config_json(config));
  j["config_hash"] = hash_hex(config_hash(config));
  j["trials"] = report.trials;
  j["segment_violations"] = report.segment_violations;
  j["gap_violations"] = report.gap_violations;
  j["cap_violations"] = report.cap_violations;
  j["growth_violations"] = report.growth_violations;
  j["segment_bound"] = report.segment_bound;
  j["gap_bound"] = report.gap_bound;
  j["slack"] = report.slack;
  j["beta"] = config.priv.beta;
  j["pass"] = report.pass;
  return j.dump(2) + "\n";
}

}  // namespace contdp
