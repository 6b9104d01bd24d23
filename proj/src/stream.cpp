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

#include "contdp/stream.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace contdp {
namespace {

void check_dims(int d, long long T) {
  if (d < 1) {
    throw std::invalid_argument("stream dimension must be >= 1");
  }
  if (T < 1) {
    throw std::invalid_argument("stream horizon must be >= 1");
  }
}

// Splits "key=value,key=value" after the generator name.
std::vector<std::pair<std::string, std::string>> parse_kv(
    const std::string& args) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(args);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= item.size()) {
      throw std::invalid_argument("malformed generator argument: " + item);
    }
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

}  // namespace

Stream::Stream(int dimension, long long horizon)
    : dimension_(dimension), horizon_(horizon) {
  check_dims(dimension, horizon);
}

void Stream::push_row(const Row& row) {
  if (static_cast<long long>(rows_.size()) >= horizon_) {
    throw std::out_of_range("stream already holds horizon rows");
  }
  if (static_cast<int>(row.size()) != dimension_) {
    throw std::invalid_argument("row width does not match stream dimension");
  }
  for (auto v : row) {
    if (v > 1) {
      throw std::invalid_argument("stream entries must be 0 or 1");
    }
  }
  rows_.push_back(row);
}

const Row& Stream::row(long long t) const {
  if (t < 1 || t > length()) {
    throw std::out_of_range("row index outside [1, length]");
  }
  return rows_[static_cast<std::size_t>(t - 1)];
}

GeneratorSpec parse_generator_spec(const std::string& text) {
  GeneratorSpec spec;
  std::string name = text;
  std::string args;
  auto colon = text.find(':');
  if (colon != std::string::npos) {
    name = text.substr(0, colon);
    args = text.substr(colon + 1);
  }
  auto kv = parse_kv(args);
  if (name == "bernoulli") {
    spec.kind = GeneratorSpec::Kind::kBernoulli;
    for (const auto& [k, v] : kv) {
      if (k == "p") {
        spec.p = std::stod(v);
      } else {
        throw std::invalid_argument("unknown bernoulli argument: " + k);
      }
    }
    if (!(spec.p >= 0.0 && spec.p <= 1.0)) {
      throw std::invalid_argument("bernoulli p must lie in [0,1]");
    }
  } else if (name == "bursty") {
    spec.kind = GeneratorSpec::Kind::kBursty;
    for (const auto& [k, v] : kv) {
      if (k == "len") {
        spec.burst_len = std::stoll(v);
      } else if (k == "period") {
        spec.burst_period = std::stoll(v);
      } else {
        throw std::invalid_argument("unknown bursty argument: " + k);
      }
    }
    if (spec.burst_len < 1) {
      throw std::invalid_argument("bursty len must be >= 1");
    }
    if (spec.burst_period != 0 && spec.burst_period < spec.burst_len) {
      throw std::invalid_argument("bursty period must be 0 or >= len");
    }
  } else if (name == "allzero") {
    spec.kind = GeneratorSpec::Kind::kAllZero;
    if (!kv.empty()) {
      throw std::invalid_argument("allzero takes no arguments");
    }
  } else if (name == "hot") {
    spec.kind = GeneratorSpec::Kind::kSingleHotColumn;
    for (const auto& [k, v] : kv) {
      if (k == "i") {
        spec.hot_column = std::stoi(v);
      } else {
        throw std::invalid_argument("unknown hot argument: " + k);
      }
    }
    if (spec.hot_column < 1) {
      throw std::invalid_argument("hot column index must be >= 1");
    }
  } else {
    throw std::invalid_argument("unknown generator: " + name);
  }
  return spec;
}

std::string to_string(const GeneratorSpec& spec) {
  std::ostringstream out;
  switch (spec.kind) {
    case GeneratorSpec::Kind::kBernoulli:
      out << "bernoulli:p=" << spec.p;
      break;
    case GeneratorSpec::Kind::kBursty:
      out << "bursty:len=" << spec.burst_len << ",period=" << spec.burst_period;
      break;
    case GeneratorSpec::Kind::kAllZero:
      out << "allzero";
      break;
    case GeneratorSpec::Kind::kSingleHotColumn:
      out << "hot:i=" << spec.hot_column;
      break;
  }
  return out.str();
}

Stream generate(const GeneratorSpec& spec, int d, long long T,
                std::uint64_t seed) {
  check_dims(d, T);
  Stream stream(d, T);
  RandomSource rng(seed);
  for (long long t = 1; t <= T; ++t) {
    Row row(static_cast<std::size_t>(d), 0);
    switch (spec.kind) {
      case GeneratorSpec::Kind::kBernoulli:
        for (int i = 0; i < d; ++i) {
          row[static_cast<std::size_t>(i)] = rng.uniform() < spec.p ? 1 : 0;
        }
        break;
      case GeneratorSpec::Kind::kBursty: {
        // Ones during the first burst_len steps of each cycle; period 0
        // collapses to a single leading burst.
        long long phase =
            spec.burst_period == 0 ? t - 1 : (t - 1) % spec.burst_period;
        if (phase < spec.burst_len) {
          for (int i = 0; i < d; ++i) {
            row[static_cast<std::size_t>(i)] = 1;
          }
        }
        break;
      }
      case GeneratorSpec::Kind::kAllZero:
        break;
      case GeneratorSpec::Kind::kSingleHotColumn:
        if (spec.hot_column > d) {
          throw std::invalid_argument("hot column index exceeds dimension");
        }
        row[static_cast<std::size_t>(spec.hot_column - 1)] = 1;
        break;
    }
    stream.push_row(row);
  }
  return stream;
}

ExactHistogram exact_prefix(const Stream& stream, long long t) {
  if (t < 0 || t > stream.length()) {
    throw std::out_of_range("prefix time outside [0, length]");
  }
  ExactHistogram h;
  h.t = t;
  h.sums.assign(static_cast<std::size_t>(stream.dimension()), 0);
  for (long long u = 1; u <= t; ++u) {
    const Row& row = stream.row(u);
    for (std::size_t i = 0; i < row.size(); ++i) {
      h.sums[i] += row[i];
    }
  }
  return h;
}

Stream make_neighbors(const Stream& stream, long long t_star,
                      const Row& new_row) {
  if (t_star < 1 || t_star > stream.length()) {
    throw std::out_of_range("replacement time outside [1, length]");
  }
  Stream out(stream.dimension(), stream.horizon());
  for (long long t = 1; t <= stream.length(); ++t) {
    out.push_row(t == t_star ? new_row : stream.row(t));
  }
  return out;
}

Stream make_independent_neighbors(const Stream& stream,
                                  const std::vector<long long>& flip_times) {
  if (static_cast<int>(flip_times.size()) != stream.dimension()) {
    throw std::invalid_argument("need one flip time per column");
  }
  for (long long t : flip_times) {
    if (t < 1 || t > stream.length()) {
      throw std::out_of_range("flip time outside [1, length]");
    }
  }
  Stream out(stream.dimension(), stream.horizon());
  for (long long t = 1; t <= stream.length(); ++t) {
    Row row = stream.row(t);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (flip_times[i] == t) {
        row[i] = row[i] ? 0 : 1;
      }
    }
    out.push_row(row);
  }
  return out;
}

void write_stream_csv(const Stream& stream, std::ostream& out) {
  out << "d=" << stream.dimension() << " T=" << stream.horizon() << "\n";
  for (long long t = 1; t <= stream.length(); ++t) {
    const Row& row = stream.row(t);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) {
        out << ",";
      }
      out << static_cast<int>(row[i]);
    }
    out << "\n";
  }
}

void write_stream_csv(const Stream& stream, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open stream file for writing: " + path);
  }
  write_stream_csv(stream, out);
}

Stream read_stream_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) {
    throw std::runtime_error("empty stream file");
  }
  int d = 0;
  long long T = 0;
  if (std::sscanf(header.c_str(), "d=%d T=%lld", &d, &T) != 2) {
    throw std::runtime_error("malformed stream header: " + header);
  }
  Stream stream(d, T);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    Row row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell == "0") {
        row.push_back(0);
      } else if (cell == "1") {
        row.push_back(1);
      } else {
        throw std::runtime_error("stream entries must be 0 or 1, got: " + cell);
      }
    }
    stream.push_row(row);  // rejects rows beyond T and width mismatches
  }
  return stream;
}

Stream read_stream_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open stream file: " + path);
  }
  return read_stream_csv(in);
}

}  // namespace contdp
