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

#include "lcshap/subset.h"

#include <algorithm>
#include <sstream>

#include "lcshap/errors.h"

namespace lcshap {

namespace {

std::size_t num_words(std::size_t dimension) { return (dimension + 63) / 64; }

}  // namespace

FeatureSubset::FeatureSubset(std::size_t dimension)
    : dimension_(dimension), words_(num_words(dimension), 0) {}

FeatureSubset::FeatureSubset(std::size_t dimension,
                             std::initializer_list<std::size_t> members)
    : FeatureSubset(dimension) {
  for (std::size_t i : members) insert(i);
}

FeatureSubset::FeatureSubset(std::size_t dimension,
                             std::span<const std::size_t> members)
    : FeatureSubset(dimension) {
  for (std::size_t i : members) insert(i);
}

FeatureSubset FeatureSubset::full(std::size_t dimension) {
  FeatureSubset s(dimension);
  for (std::size_t w = 0; w < s.words_.size(); ++w) s.words_[w] = ~std::uint64_t{0};
  if (dimension % 64 != 0) {
    s.words_.back() = (std::uint64_t{1} << (dimension % 64)) - 1;
  }
  return s;
}

FeatureSubset FeatureSubset::from_mask(std::size_t dimension, std::uint64_t mask) {
  if (dimension > 64) {
    throw DimensionError("from_mask requires dimension <= 64, got " +
                         std::to_string(dimension));
  }
  if (dimension < 64 && (mask >> dimension) != 0) {
    throw IndexError("mask has bits beyond dimension " + std::to_string(dimension));
  }
  FeatureSubset s(dimension);
  if (dimension > 0) s.words_[0] = mask;
  return s;
}

std::size_t FeatureSubset::size() const {
  std::size_t n = 0;
  for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool FeatureSubset::empty() const {
  return std::all_of(words_.begin(), words_.end(),
                     [](std::uint64_t w) { return w == 0; });
}

void FeatureSubset::check_index(std::size_t i) const {
  if (i >= dimension_) {
    throw IndexError("feature index " + std::to_string(i) +
                     " out of range for dimension " + std::to_string(dimension_));
  }
}

void FeatureSubset::check_same_dimension(const FeatureSubset& other) const {
  if (other.dimension_ != dimension_) {
    throw DimensionError("subset dimensions differ: " + std::to_string(dimension_) +
                         " vs " + std::to_string(other.dimension_));
  }
}

FeatureSubset& FeatureSubset::insert(std::size_t i) {
  check_index(i);
  words_[i >> 6] |= std::uint64_t{1} << (i & 63);
  return *this;
}

FeatureSubset& FeatureSubset::erase(std::size_t i) {
  check_index(i);
  words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
  return *this;
}

std::vector<std::size_t> FeatureSubset::members() const {
  std::vector<std::size_t> out;
  out.reserve(size());
  for_each([&](std::size_t i) { out.push_back(i); });
  return out;
}

std::uint64_t FeatureSubset::mask() const {
  if (dimension_ > 64) {
    throw DimensionError("mask() requires dimension <= 64, got " +
                         std::to_string(dimension_));
  }
  return words_.empty() ? 0 : words_[0];
}

bool FeatureSubset::is_subset_of(const FeatureSubset& other) const {
  check_same_dimension(other);
  for (std::size_t w = 0; w < words_.size(); ++w) {
    if ((words_[w] & ~other.words_[w]) != 0) return false;
  }
  return true;
}

bool FeatureSubset::intersects(const FeatureSubset& other) const {
  check_same_dimension(other);
  for (std::size_t w = 0; w < words_.size(); ++w) {
    if ((words_[w] & other.words_[w]) != 0) return true;
  }
  return false;
}

FeatureSubset FeatureSubset::operator|(const FeatureSubset& other) const {
  check_same_dimension(other);
  FeatureSubset out(*this);
  for (std::size_t w = 0; w < words_.size(); ++w) out.words_[w] |= other.words_[w];
  return out;
}

FeatureSubset FeatureSubset::operator&(const FeatureSubset& other) const {
  check_same_dimension(other);
  FeatureSubset out(*this);
  for (std::size_t w = 0; w < words_.size(); ++w) out.words_[w] &= other.words_[w];
  return out;
}

FeatureSubset FeatureSubset::operator-(const FeatureSubset& other) const {
  check_same_dimension(other);
  FeatureSubset out(*this);
  for (std::size_t w = 0; w < words_.size(); ++w) out.words_[w] &= ~other.words_[w];
  return out;
}

FeatureSubset FeatureSubset::complement() const { return full(dimension_) - *this; }

std::size_t FeatureSubset::hash() const {
  // 64-bit FNV-1a over the words, seeded with the dimension.
  std::uint64_t h = 1469598103934665603ULL ^ dimension_;
  for (std::uint64_t w : words_) {
    for (int b = 0; b < 8; ++b) {
      h ^= (w >> (8 * b)) & 0xff;
      h *= 1099511628211ULL;
    }
  }
  return static_cast<std::size_t>(h);
}

std::string FeatureSubset::to_string() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for_each([&](std::size_t i) {
    if (!first) os << ',';
    os << i;
    first = false;
  });
  os << '}';
  return os.str();
}

bool canonical_less(const FeatureSubset& a, const FeatureSubset& b) {
  const std::size_t sa = a.size();
  const std::size_t sb = b.size();
  if (sa != sb) return sa < sb;
  const auto ma = a.members();
  const auto mb = b.members();
  return std::lexicographical_compare(ma.begin(), ma.end(), mb.begin(), mb.end());
}

}  // namespace lcshap
