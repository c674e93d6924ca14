// Copyright 2026 The lcshap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LCSHAP_SUBSET_H_
#define LCSHAP_SUBSET_H_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lcshap {

// A set of feature indices drawn from {0, ..., dimension-1}, stored as a bit
// vector. Two subsets compare equal only if they share a dimension.
class FeatureSubset {
 public:
  FeatureSubset() = default;
  explicit FeatureSubset(std::size_t dimension);
  FeatureSubset(std::size_t dimension, std::initializer_list<std::size_t> members);
  FeatureSubset(std::size_t dimension, std::span<const std::size_t> members);

  static FeatureSubset full(std::size_t dimension);
  // Bit j of `mask` selects feature j. Requires dimension <= 64.
  static FeatureSubset from_mask(std::size_t dimension, std::uint64_t mask);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const;
  bool empty() const;
  bool contains(std::size_t i) const {
    return i < dimension_ && ((words_[i >> 6] >> (i & 63)) & 1U) != 0;
  }

  FeatureSubset& insert(std::size_t i);
  FeatureSubset& erase(std::size_t i);
  FeatureSubset with(std::size_t i) const { return FeatureSubset(*this).insert(i); }
  FeatureSubset without(std::size_t i) const { return FeatureSubset(*this).erase(i); }

  std::vector<std::size_t> members() const;
  std::uint64_t mask() const;

  bool is_subset_of(const FeatureSubset& other) const;
  bool intersects(const FeatureSubset& other) const;

  FeatureSubset operator|(const FeatureSubset& other) const;
  FeatureSubset operator&(const FeatureSubset& other) const;
  // Set difference.
  FeatureSubset operator-(const FeatureSubset& other) const;
  // Complement within {0, ..., dimension-1}.
  FeatureSubset complement() const;

  bool operator==(const FeatureSubset& other) const = default;

  std::size_t hash() const;
  std::string to_string() const;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t word = words_[w];
      while (word != 0) {
        const int bit = std::countr_zero(word);
        fn(w * 64 + static_cast<std::size_t>(bit));
        word &= word - 1;
      }
    }
  }

 private:
  void check_same_dimension(const FeatureSubset& other) const;
  void check_index(std::size_t i) const;

  std::size_t dimension_ = 0;
  std::vector<std::uint64_t> words_;
};

struct FeatureSubsetHash {
  std::size_t operator()(const FeatureSubset& s) const { return s.hash(); }
};

// Canonical order: by size, then lexicographically by sorted member list.
bool canonical_less(const FeatureSubset& a, const FeatureSubset& b);

}  // namespace lcshap

#endif  // LCSHAP_SUBSET_H_
