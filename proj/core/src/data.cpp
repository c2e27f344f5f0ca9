/*
 * Copyright 2026 The PBM Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pbm/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>

namespace pbm {

SparseVector::SparseVector(std::vector<SparseEntry> entries) {
  entries_.reserve(entries.size());
  std::uint32_t previous = 0;
  for (const auto& e : entries) {
    if (e.index == 0) throw std::invalid_argument("feature indices are 1-based");
    if (e.index <= previous) throw std::invalid_argument("feature indices must be strictly increasing");
    previous = e.index;
    if (e.value != 0.0) entries_.push_back(e);
  }
}

double SparseVector::squared_norm() const noexcept {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.value * e.value;
  return sum;
}

double SparseVector::dot(const SparseVector& other) const noexcept {
  double sum = 0.0;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() && b != other.entries_.end()) {
    if (a->index == b->index) {
      sum += a->value * b->value;
      ++a;
      ++b;
    } else if (a->index < b->index) {
      ++a;
    } else {
      ++b;
    }
  }
  return sum;
}

double SparseVector::squared_distance(const SparseVector& other) const noexcept {
  double sum = 0.0;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  const auto a_end = entries_.end();
  const auto b_end = other.entries_.end();
  while (a != a_end || b != b_end) {
    double diff;
    if (b == b_end || (a != a_end && a->index < b->index)) {
      diff = a->value;
      ++a;
    } else if (a == a_end || b->index < a->index) {
      diff = b->value;
      ++b;
    } else {
      diff = a->value - b->value;
      ++a;
      ++b;
    }
    sum += diff * diff;
  }
  return sum;
}

void Dataset::validate() const {
  if (samples.empty()) throw std::invalid_argument("dataset is empty");
  if (samples.size() != labels.size()) throw std::invalid_argument("sample/label count mismatch");
  std::size_t max_index = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (labels[i] != 1.0 && labels[i] != -1.0) {
      throw std::invalid_argument("label " + std::to_string(i) + " is not +1/-1");
    }
    max_index = std::max<std::size_t>(max_index, samples[i].max_index());
  }
  if (max_index > dim) throw std::invalid_argument("dim smaller than largest feature index");
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
      line_(line) {}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::string_view next_token(std::string_view& rest) {
  std::size_t begin = 0;
  while (begin < rest.size() && is_space(rest[begin])) ++begin;
  std::size_t end = begin;
  while (end < rest.size() && !is_space(rest[end])) ++end;
  auto token = rest.substr(begin, end - begin);
  rest.remove_prefix(end);
  return token;
}

double parse_double(std::string_view token, std::size_t line, const char* what) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(token) + "'");
  }
  return value;
}

class LabelResolver {
 public:
  explicit LabelResolver(const std::optional<LabelMap>& fixed) : fixed_(fixed) {}

  void observe(double raw, std::size_t line) {
    if (fixed_) {
      if (raw != fixed_->positive && raw != fixed_->negative) {
        throw ParseError(line, "label " + format(raw) + " not in the model's label set");
      }
      return;
    }
    if (std::find(seen_.begin(), seen_.end(), raw) != seen_.end()) return;
    if (seen_.size() == 2) {
      throw ParseError(line, "more than two distinct labels (binary classification only)");
    }
    seen_.push_back(raw);
  }

  [[nodiscard]] LabelMap resolve() const {
    if (fixed_) return *fixed_;
    const bool plus_minus_one = std::all_of(seen_.begin(), seen_.end(), [](double v) {
      return v == 1.0 || v == -1.0;
    });
    if (plus_minus_one) return LabelMap{};
    LabelMap map;
    map.positive = seen_[0];
    map.negative = seen_.size() == 2 ? seen_[1] : -1.0;
    return map;
  }

 private:
  static std::string format(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }

  std::optional<LabelMap> fixed_;
  std::vector<double> seen_;
};

template <typename NextLine>
Dataset parse_lines(NextLine&& next_line, const std::optional<LabelMap>& labels) {
  Dataset data;
  std::vector<double> raw_labels;
  LabelResolver resolver(labels);
  std::string line;
  std::size_t line_no = 0;
  std::vector<SparseEntry> entries;
  while (next_line(line)) {
    ++line_no;
    std::string_view rest(line);
    if (const auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);
    auto token = next_token(rest);
    if (token.empty()) continue;

    const double raw = parse_double(token, line_no, "label");
    resolver.observe(raw, line_no);

    entries.clear();
    std::uint32_t previous = 0;
    for (token = next_token(rest); !token.empty(); token = next_token(rest)) {
      const auto colon = token.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "expected idx:val, got '" + std::string(token) + "'");
      }
      std::uint32_t index = 0;
      const auto idx = token.substr(0, colon);
      const auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), index);
      if (ec != std::errc() || ptr != idx.data() + idx.size() || index == 0) {
        throw ParseError(line_no, "bad feature index '" + std::string(idx) + "'");
      }
      if (index <= previous) throw ParseError(line_no, "feature indices must be strictly increasing");
      previous = index;
      const double value = parse_double(token.substr(colon + 1), line_no, "feature value");
      if (value != 0.0) entries.push_back({index, value});
    }
    data.dim = std::max<std::size_t>(data.dim, previous);
    data.samples.emplace_back(entries);
    raw_labels.push_back(raw);
  }
  if (data.samples.empty()) throw ParseError(0, "empty input: no samples");

  data.label_map = resolver.resolve();
  data.labels.reserve(raw_labels.size());
  for (const double raw : raw_labels) {
    data.labels.push_back(raw == data.label_map.positive ? 1.0 : -1.0);
  }
  return data;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const std::optional<LabelMap>& labels) {
  return parse_lines([&](std::string& line) { return static_cast<bool>(std::getline(in, line)); },
                     labels);
}

Dataset load_libsvm(const std::filesystem::path& path, const std::optional<LabelMap>& labels) {
  if (path.extension() != ".gz") {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open " + path.string());
    return parse_libsvm(in, labels);
  }

  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw std::ios_base::failure("cannot open " + path.string());
  struct Closer {
    gzFile f;
    ~Closer() { gzclose(f); }
  } closer{file};

  std::string pending;
  std::array<char, 1 << 16> buffer{};
  bool eof = false;
  auto next_line = [&](std::string& line) {
    while (true) {
      if (const auto nl = pending.find('\n'); nl != std::string::npos) {
        line.assign(pending, 0, nl);
        pending.erase(0, nl + 1);
        return true;
      }
      if (eof) {
        if (pending.empty()) return false;
        line = std::move(pending);
        pending.clear();
        return true;
      }
      const int got = gzread(file, buffer.data(), static_cast<unsigned>(buffer.size()));
      if (got < 0) throw std::ios_base::failure("gzip read error in " + path.string());
      if (got == 0) eof = true;
      pending.append(buffer.data(), static_cast<std::size_t>(got));
    }
  };
  return parse_lines(next_line, labels);
}

namespace {

void append_double(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), ptr);
}

}  // namespace

void write_libsvm(std::ostream& out, const Dataset& data) {
  std::string line;
  for (std::size_t i = 0; i < data.size(); ++i) {
    line.clear();
    append_double(line, data.label_map.to_raw(data.labels[i]));
    for (const auto& e : data.samples[i].entries()) {
      line.push_back(' ');
      line.append(std::to_string(e.index));
      line.push_back(':');
      append_double(line, e.value);
    }
    line.push_back('\n');
    out << line;
  }
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t m, std::uint64_t seed) {
  m = std::min(m, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first m slots are a uniform sample.
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(m);
  std::sort(order.begin(), order.end());
  return order;
}

Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.dim = data.dim;
  out.label_map = data.label_map;
  out.samples.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (const auto i : indices) {
    out.samples.push_back(data.samples.at(i));
    out.labels.push_back(data.labels.at(i));
  }
  return out;
}

Dataset subsample(const Dataset& data, std::size_t m, std::uint64_t seed) {
  return select_rows(data, subsample_indices(data.size(), m, seed));
}

}  // namespace pbm
