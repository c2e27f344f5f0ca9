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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pbm {

/// One stored coordinate of a sparse sample. Feature indices are 1-based as in
/// the LIBSVM text format.
struct SparseEntry {
  std::uint32_t index;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Sparse feature vector with strictly increasing indices and no stored zeros.
class SparseVector {
 public:
  SparseVector() = default;

  /// Validates ordering and drops explicit zeros. Throws std::invalid_argument
  /// on a zero, repeated or decreasing index.
  explicit SparseVector(std::vector<SparseEntry> entries);
  SparseVector(std::initializer_list<SparseEntry> entries)
      : SparseVector(std::vector<SparseEntry>(entries)) {}

  [[nodiscard]] const std::vector<SparseEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t nnz() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] std::uint32_t max_index() const noexcept {
    return entries_.empty() ? 0 : entries_.back().index;
  }

  [[nodiscard]] double squared_norm() const noexcept;
  [[nodiscard]] double dot(const SparseVector& other) const noexcept;
  /// ||x - z||^2 by merging the two index lists.
  [[nodiscard]] double squared_distance(const SparseVector& other) const noexcept;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::vector<SparseEntry> entries_;
};

/// Raw label values that map to +1 and -1.
struct LabelMap {
  double positive = +1.0;
  double negative = -1.0;

  [[nodiscard]] double to_raw(double label) const noexcept {
    return label > 0 ? positive : negative;
  }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Binary-labelled sample matrix. Labels are always +1 or -1.
struct Dataset {
  std::vector<SparseVector> samples;
  std::vector<double> labels;
  std::size_t dim = 0;
  LabelMap label_map;

  [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }

  /// Checks |samples| == |labels| >= 1, labels in {-1,+1} and dim consistency.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  /// 1-based line number, 0 when the error is not tied to a line.
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Reads `label idx:val idx:val ...` lines. Blank lines and `#` comments are
/// skipped. When `labels` is given, raw labels must match it; otherwise labels
/// already in {-1,+1} are kept and any other pair is mapped by first-seen order
/// (first -> +1).
Dataset parse_libsvm(std::istream& in, const std::optional<LabelMap>& labels = std::nullopt);

/// Loads a file, decompressing transparently when the name ends in `.gz`.
Dataset load_libsvm(const std::filesystem::path& path,
                    const std::optional<LabelMap>& labels = std::nullopt);

/// Writes raw labels (through `label_map`) and shortest round-trip decimal
/// values, so parsing the output reproduces `data`.
void write_libsvm(std::ostream& out, const Dataset& data);

/// Indices of a uniform sample without replacement of min(m, n) rows, in
/// increasing order. Deterministic for a fixed seed.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t m, std::uint64_t seed);

Dataset subsample(const Dataset& data, std::size_t m, std::uint64_t seed);

/// Rows `indices` of `data`, in the given order.
Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& indices);

}  // namespace pbm
