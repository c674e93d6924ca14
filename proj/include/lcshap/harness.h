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

// Masking evaluation: rank features by attribution, replace the top fraction
// with reference values, and track how the predicted class's log-probability
// moves.

#ifndef LCSHAP_HARNESS_H_
#define LCSHAP_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcshap/attribution.h"
#include "lcshap/graph.h"
#include "lcshap/valuation.h"

namespace lcshap {

struct LabeledInstance {
  Instance x;
  std::optional<std::size_t> label;
};

// One {"values":[...],"reference":[...],"label":int?} object per line.
std::vector<LabeledInstance> read_dataset_jsonl(std::istream& in);
void write_dataset_jsonl(std::span<const LabeledInstance> data, std::ostream& out);

// Masks the top ceil(fraction * d) features by descending score, ties going
// to the lower index.
Instance mask_top_features(const Instance& x, std::span<const double> scores, double fraction);

// A method as configured for the harness. kRandom ranks features by seeded
// uniform noise and makes no model calls.
struct MethodSpec {
  enum class Kind { kAttribution, kRandom };
  Kind kind = Kind::kAttribution;
  Method method = Method::kLShapley;
  std::size_t k = 1;

  std::string label() const;
};

// "random", "l-shapley[:k]", "c-shapley[:k]", "c-shapley-reg[:k]", "sample",
// "kernelshap", "exact", "myerson". Orders default to 1 (4 for c-shapley-reg).
MethodSpec parse_method_spec(const std::string& text);
std::vector<MethodSpec> parse_method_list(const std::string& csv);

struct ExplainOptions {
  // Distinct subsets allowed per instance; unset means unlimited.
  std::optional<std::size_t> budget;
  std::uint64_t seed = 0;
  std::size_t exact_limit = kDefaultExactLimit;
};

// Runs one method on one value function. Sampling methods size themselves to
// the budget: sample uses floor((budget - 2) / (d - 1)) permutations,
// kernelshap uses budget - 2 rows. Deterministic methods that need more than
// the budget fail with BudgetExceededError naming the method.
AttributionResult explain(SetFunction& v, const FeatureGraph& g, const MethodSpec& spec,
                          const ExplainOptions& options);

inline const std::vector<double> kDefaultFractions = {0.0,  0.05, 0.1,  0.15, 0.2, 0.25,
                                                      0.3,  0.35, 0.4,  0.45, 0.5};

struct EvaluationCurve {
  std::string method;
  std::vector<double> fractions;
  std::vector<double> mean_log_odds_change;
  std::size_t num_instances = 0;
  std::uint64_t seed = 0;
  // Distinct subsets summed over instances.
  std::size_t model_evaluations = 0;
};

struct CurveOptions {
  std::vector<double> fractions = kDefaultFractions;
  std::optional<std::size_t> budget;
  std::uint64_t seed = 0;
  // Average only over instances whose label equals the unmasked prediction.
  bool correct_only = false;
  ScoreMode mode = ScoreMode::kPredictedClassLogProb;
  std::size_t batch_size = kDefaultBatchSize;
};

// Mean over instances of log P(y_hat | masked x) - log P(y_hat | x), with
// y_hat frozen at the unmasked prediction. Instance j is explained with seed
// options.seed + j.
EvaluationCurve log_odds_curve(Model& model, std::span<const LabeledInstance> dataset,
                               const FeatureGraph& g, const MethodSpec& spec,
                               const CurveOptions& options);

// Every method under the same per-instance budget. The budget must be at
// least d.
std::vector<EvaluationCurve> compare_methods(Model& model,
                                             std::span<const LabeledInstance> dataset,
                                             const FeatureGraph& g,
                                             std::span<const MethodSpec> methods,
                                             std::size_t budget, const CurveOptions& options);

// method,fraction,mean_log_odds_change,n,seed
void write_curves_csv(std::span<const EvaluationCurve> curves, std::ostream& out);

// Trapezoidal area under a curve.
double area_under_curve(const EvaluationCurve& curve);

}  // namespace lcshap

#endif  // LCSHAP_HARNESS_H_
