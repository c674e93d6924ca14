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

#ifndef LCSHAP_ATTRIBUTION_H_
#define LCSHAP_ATTRIBUTION_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lcshap/graph.h"
#include "lcshap/valuation.h"

namespace lcshap {

enum class Method {
  kExact,
  kLShapley,
  kCShapley,
  kCShapleyRegression,
  kSampleShapley,
  kKernelShap,
  kMyerson,
};

// CLI spelling: exact, l-shapley, c-shapley, c-shapley-reg, sample,
// kernelshap, myerson.
std::string to_string(Method method);
Method parse_method(const std::string& name);

struct AttributionResult {
  Method method = Method::kExact;
  std::optional<std::size_t> order_k;
  std::vector<double> scores;
  // Distinct subsets this run added to the set function's cache.
  std::size_t model_evaluations = 0;
  std::optional<std::uint64_t> seed;
  std::chrono::duration<double, std::milli> elapsed{0};
};

// {"method", "k", "scores", "evals", "seed", "elapsed_ms"}; "k" and "seed" are
// null when absent. Timing is omitted unless requested, which keeps the output
// reproducible.
nlohmann::json to_json(const AttributionResult& result, bool include_elapsed = false);

inline constexpr std::size_t kDefaultExactLimit = 20;
inline constexpr std::size_t kDefaultMyersonLimit = 15;
inline constexpr std::size_t kDefaultMaxNeighborhood = 20;

// Shapley value by full subset enumeration. Every subset is evaluated once and
// its weighted value is scattered to all features.
AttributionResult exact_shapley(SetFunction& v, std::size_t limit = kDefaultExactLimit);

// Averages marginal contributions over all d! orderings. Oracle for small d.
AttributionResult exhaustive_permutation_shapley(SetFunction& v, std::size_t limit = 8);

// Shapley value of the game restricted to the players N_k(i). Neighborhoods
// larger than `max_neighborhood` raise BudgetExceededError.
double l_shapley(SetFunction& v, const FeatureGraph& g, std::size_t i, std::size_t k,
                 std::size_t max_neighborhood = kDefaultMaxNeighborhood);
AttributionResult l_shapley_all(SetFunction& v, const FeatureGraph& g, std::size_t k,
                                std::size_t max_neighborhood = kDefaultMaxNeighborhood);

enum class CoefficientRule {
  // Weight of U is (|U|-1)! b! / (|U|+b)! with b the number of nodes of N_k(i)
  // adjacent to U but outside it. This is the Myerson weight of U in the game
  // restricted to N_k(i), and reproduces the Myerson value when N_k(i) is the
  // whole graph.
  kNeighborhoodMyerson,
  // Weight 2 / ((|U|+2)(|U|+1)|U|) for every U: the b = 2 case of the rule
  // above, i.e. every connected set is treated as having two outside
  // neighbours (an interior interval of a long chain).
  kTwoSidedClosedForm,
};

std::string to_string(CoefficientRule rule);

// 1 / (u * C(u + b, b)) == (u-1)! b! / (u+b)!.
double myerson_coefficient(std::size_t subset_size, std::size_t boundary_size);
// 2 / ((u+2)(u+1)u).
double two_sided_coefficient(std::size_t subset_size);

struct CShapleyOptions {
  CoefficientRule rule = CoefficientRule::kNeighborhoodMyerson;
  ConnectedSubsetLimits limits;
};

double c_shapley(SetFunction& v, const FeatureGraph& g, std::size_t i, std::size_t k,
                 const CShapleyOptions& options = {});
AttributionResult c_shapley_all(SetFunction& v, const FeatureGraph& g, std::size_t k,
                                const CShapleyOptions& options = {});

// Monte Carlo over permutations. All permutations are drawn from `seed` before
// any evaluation.
AttributionResult sample_shapley(SetFunction& v, std::size_t num_permutations,
                                 std::uint64_t seed);

// The graph-restricted game: w(S) = v(empty) + sum over connected components T
// of S of (v(T) - v(empty)). Only connected subsets reach the inner function.
class GraphRestrictedGame : public SetFunction {
 public:
  GraphRestrictedGame(SetFunction& inner, const FeatureGraph& g);

 protected:
  std::vector<double> compute(std::span<const FeatureSubset> subsets) override;

 private:
  SetFunction& inner_;
  const FeatureGraph& g_;
};

// Shapley value of the graph-restricted game. `model_evaluations` counts the
// distinct subsets evaluated on `v` itself.
AttributionResult myerson_value(SetFunction& v, const FeatureGraph& g,
                                std::size_t limit = kDefaultMyersonLimit);

// n choose k as a double; exact for the ranges used here.
double binomial(std::size_t n, std::size_t k);

}  // namespace lcshap

#endif  // LCSHAP_ATTRIBUTION_H_
