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

#include "lcshap/attribution.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "lcshap/errors.h"

namespace lcshap {

namespace {

using Clock = std::chrono::steady_clock;

class RunScope {
 public:
  explicit RunScope(const SetFunction& v)
      : v_(v), start_evals_(v.distinct_evaluations()), start_(Clock::now()) {}

  void finish(AttributionResult& result) const {
    result.model_evaluations = v_.distinct_evaluations() - start_evals_;
    result.elapsed = Clock::now() - start_;
  }

 private:
  const SetFunction& v_;
  std::size_t start_evals_;
  Clock::time_point start_;
};

void check_limit(std::size_t d, std::size_t limit, const char* method) {
  if (d > limit) {
    throw LimitExceededError(std::string(method) + " refuses d = " + std::to_string(d) +
                             " (limit " + std::to_string(limit) +
                             "); use l-shapley, c-shapley, sample or kernelshap instead");
  }
}

// Translates a mask over the members of `players` (bit j <-> players[j]) into
// a subset of the full feature space.
FeatureSubset expand(std::size_t d, const std::vector<std::size_t>& players,
                     std::uint64_t local_mask) {
  FeatureSubset s(d);
  while (local_mask != 0) {
    s.insert(players[static_cast<std::size_t>(std::countr_zero(local_mask))]);
    local_mask &= local_mask - 1;
  }
  return s;
}

// Shapley value of feature `players[target]` in v restricted to `players`.
double restricted_shapley(SetFunction& v, const std::vector<std::size_t>& players,
                          std::size_t target) {
  const std::size_t n = players.size();
  const std::size_t d = v.num_features();
  const std::uint64_t target_bit = std::uint64_t{1} << target;
  std::vector<FeatureSubset> subsets;
  subsets.reserve(std::size_t{1} << n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    subsets.push_back(expand(d, players, mask));
  }
  const auto vals = v.values(subsets);
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    if ((mask & target_bit) == 0) continue;
    const auto t = static_cast<std::size_t>(std::popcount(mask));
    const double coeff = 1.0 / (static_cast<double>(n) * binomial(n - 1, t - 1));
    total += coeff * (vals[mask] - vals[mask & ~target_bit]);
  }
  return total;
}

void accumulate_permutation(SetFunction& v, const std::vector<std::size_t>& order,
                            std::vector<double>& sums) {
  const std::size_t d = v.num_features();
  std::vector<FeatureSubset> prefixes;
  prefixes.reserve(d + 1);
  FeatureSubset current(d);
  prefixes.push_back(current);
  for (std::size_t i : order) {
    current.insert(i);
    prefixes.push_back(current);
  }
  const auto vals = v.values(prefixes);
  for (std::size_t pos = 0; pos < d; ++pos) sums[order[pos]] += vals[pos + 1] - vals[pos];
}

}  // namespace

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double out = 1.0;
  for (std::size_t j = 1; j <= k; ++j) {
    out = out * static_cast<double>(n - k + j) / static_cast<double>(j);
  }
  return n > 60 ? out : std::round(out);
}

std::string to_string(Method method) {
  switch (method) {
    case Method::kExact:
      return "exact";
    case Method::kLShapley:
      return "l-shapley";
    case Method::kCShapley:
      return "c-shapley";
    case Method::kCShapleyRegression:
      return "c-shapley-reg";
    case Method::kSampleShapley:
      return "sample";
    case Method::kKernelShap:
      return "kernelshap";
    case Method::kMyerson:
      return "myerson";
  }
  return "exact";
}

Method parse_method(const std::string& name) {
  std::string key = name;
  std::replace(key.begin(), key.end(), '_', '-');
  if (key == "exact") return Method::kExact;
  if (key == "l-shapley") return Method::kLShapley;
  if (key == "c-shapley") return Method::kCShapley;
  if (key == "c-shapley-reg" || key == "c-shapley-regression") {
    return Method::kCShapleyRegression;
  }
  if (key == "sample" || key == "sample-shapley") return Method::kSampleShapley;
  if (key == "kernelshap") return Method::kKernelShap;
  if (key == "myerson") return Method::kMyerson;
  throw ConfigurationError("unknown attribution method '" + name + "'");
}

std::string to_string(CoefficientRule rule) {
  return rule == CoefficientRule::kNeighborhoodMyerson ? "neighborhood-myerson"
                                                       : "two-sided";
}

nlohmann::json to_json(const AttributionResult& result, bool include_elapsed) {
  nlohmann::json j;
  j["method"] = to_string(result.method);
  j["k"] = result.order_k ? nlohmann::json(*result.order_k) : nlohmann::json(nullptr);
  j["scores"] = result.scores;
  j["evals"] = result.model_evaluations;
  j["seed"] = result.seed ? nlohmann::json(*result.seed) : nlohmann::json(nullptr);
  if (include_elapsed) j["elapsed_ms"] = result.elapsed.count();
  return j;
}

AttributionResult exact_shapley(SetFunction& v, std::size_t limit) {
  const std::size_t d = v.num_features();
  check_limit(d, std::min<std::size_t>(limit, 30), "exact_shapley");
  RunScope scope(v);
  const std::uint64_t n = std::uint64_t{1} << d;
  std::vector<FeatureSubset> subsets;
  subsets.reserve(n);
  for (std::uint64_t mask = 0; mask < n; ++mask) subsets.push_back(FeatureSubset::from_mask(d, mask));
  const auto vals = v.values(subsets);

  // weight[s] = s! (d-s-1)! / d!, the probability that a fixed player is
  // preceded by exactly a given coalition of size s.
  std::vector<double> weight(d);
  for (std::size_t s = 0; s < d; ++s) {
    weight[s] = 1.0 / (static_cast<double>(d) * binomial(d - 1, s));
  }
  // Sum marginals per coalition size first, then weight. Integer-valued games
  // then give bitwise-equal scores to interchangeable players.
  std::vector<std::vector<double>> by_size(d, std::vector<double>(d, 0.0));
  for (std::uint64_t mask = 0; mask < n; ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    for (std::size_t i = 0; i < d; ++i) {
      if ((mask >> i) & 1U) {
        by_size[i][size - 1] += vals[mask];
      } else {
        by_size[i][size] -= vals[mask];
      }
    }
  }
  std::vector<double> phi(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t s = 0; s < d; ++s) phi[i] += weight[s] * by_size[i][s];
  }
  AttributionResult result;
  result.method = Method::kExact;
  result.scores = std::move(phi);
  scope.finish(result);
  return result;
}

AttributionResult exhaustive_permutation_shapley(SetFunction& v, std::size_t limit) {
  const std::size_t d = v.num_features();
  check_limit(d, std::min<std::size_t>(limit, 10), "exhaustive_permutation_shapley");
  RunScope scope(v);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> sums(d, 0.0);
  double count = 0;
  do {
    accumulate_permutation(v, order, sums);
    count += 1;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& s : sums) s /= count;
  AttributionResult result;
  result.method = Method::kSampleShapley;
  result.scores = std::move(sums);
  scope.finish(result);
  return result;
}

double l_shapley(SetFunction& v, const FeatureGraph& g, std::size_t i, std::size_t k,
                 std::size_t max_neighborhood) {
  if (g.num_nodes() != v.num_features()) {
    throw DimensionError("graph and set function disagree on the number of features");
  }
  const auto players = k_neighborhood(g, i, k).members();
  if (players.size() > std::min<std::size_t>(max_neighborhood, 62)) {
    throw BudgetExceededError("l_shapley: neighborhood of node " + std::to_string(i) +
                                  " has " + std::to_string(players.size()) +
                                  " nodes, more than the cap of " +
                                  std::to_string(max_neighborhood),
                              players.size());
  }
  const auto target = static_cast<std::size_t>(
      std::find(players.begin(), players.end(), i) - players.begin());
  return restricted_shapley(v, players, target);
}

AttributionResult l_shapley_all(SetFunction& v, const FeatureGraph& g, std::size_t k,
                                std::size_t max_neighborhood) {
  RunScope scope(v);
  AttributionResult result;
  result.method = Method::kLShapley;
  result.order_k = k;
  result.scores.resize(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    result.scores[i] = l_shapley(v, g, i, k, max_neighborhood);
  }
  scope.finish(result);
  return result;
}

double myerson_coefficient(std::size_t subset_size, std::size_t boundary_size) {
  if (subset_size == 0) throw PreconditionError("coefficient needs a nonempty subset");
  return 1.0 / (static_cast<double>(subset_size) *
                binomial(subset_size + boundary_size, boundary_size));
}

double two_sided_coefficient(std::size_t subset_size) {
  if (subset_size == 0) throw PreconditionError("coefficient needs a nonempty subset");
  const auto u = static_cast<double>(subset_size);
  return 2.0 / ((u + 2.0) * (u + 1.0) * u);
}

double c_shapley(SetFunction& v, const FeatureGraph& g, std::size_t i, std::size_t k,
                 const CShapleyOptions& options) {
  if (g.num_nodes() != v.num_features()) {
    throw DimensionError("graph and set function disagree on the number of features");
  }
  const auto connected = connected_subsets_containing(g, i, k, options.limits);
  const FeatureSubset nbhd = k_neighborhood(g, i, k);

  std::vector<FeatureSubset> queries;
  queries.reserve(2 * connected.size());
  for (const auto& u : connected) {
    queries.push_back(u);
    queries.push_back(u.without(i));
  }
  const auto vals = v.values(queries);

  double total = 0.0;
  for (std::size_t j = 0; j < connected.size(); ++j) {
    const auto& u = connected[j];
    const double coeff =
        options.rule == CoefficientRule::kNeighborhoodMyerson
            ? myerson_coefficient(u.size(), (g.boundary(u) & nbhd).size())
            : two_sided_coefficient(u.size());
    total += coeff * (vals[2 * j] - vals[2 * j + 1]);
  }
  return total;
}

AttributionResult c_shapley_all(SetFunction& v, const FeatureGraph& g, std::size_t k,
                                const CShapleyOptions& options) {
  RunScope scope(v);
  AttributionResult result;
  result.method = Method::kCShapley;
  result.order_k = k;
  result.scores.resize(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    result.scores[i] = c_shapley(v, g, i, k, options);
  }
  scope.finish(result);
  return result;
}

AttributionResult sample_shapley(SetFunction& v, std::size_t num_permutations,
                                 std::uint64_t seed) {
  if (num_permutations == 0) throw PreconditionError("sample_shapley needs at least one permutation");
  const std::size_t d = v.num_features();
  RunScope scope(v);
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> orders(num_permutations, std::vector<std::size_t>(d));
  for (auto& order : orders) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<double> sums(d, 0.0);
  for (const auto& order : orders) accumulate_permutation(v, order, sums);
  for (double& s : sums) s /= static_cast<double>(num_permutations);

  AttributionResult result;
  result.method = Method::kSampleShapley;
  result.scores = std::move(sums);
  result.seed = seed;
  scope.finish(result);
  return result;
}

GraphRestrictedGame::GraphRestrictedGame(SetFunction& inner, const FeatureGraph& g)
    : SetFunction(inner.num_features()), inner_(inner), g_(g) {
  if (g.num_nodes() != inner.num_features()) {
    throw DimensionError("graph and set function disagree on the number of features");
  }
}

std::vector<double> GraphRestrictedGame::compute(std::span<const FeatureSubset> subsets) {
  const std::size_t d = num_features();
  std::vector<std::vector<FeatureSubset>> pieces;
  pieces.reserve(subsets.size());
  std::vector<FeatureSubset> queries{FeatureSubset(d)};
  for (const auto& s : subsets) {
    pieces.push_back(connected_components(g_, s));
    queries.insert(queries.end(), pieces.back().begin(), pieces.back().end());
  }
  inner_.prefetch(queries);
  const double empty_value = inner_.value(FeatureSubset(d));
  std::vector<double> out;
  out.reserve(subsets.size());
  for (const auto& comps : pieces) {
    double total = empty_value;
    for (const auto& t : comps) total += inner_.value(t) - empty_value;
    out.push_back(total);
  }
  return out;
}

AttributionResult myerson_value(SetFunction& v, const FeatureGraph& g, std::size_t limit) {
  check_limit(v.num_features(), limit, "myerson_value");
  RunScope scope(v);
  GraphRestrictedGame restricted(v, g);
  AttributionResult result = exact_shapley(restricted, limit);
  result.method = Method::kMyerson;
  scope.finish(result);
  return result;
}

}  // namespace lcshap
