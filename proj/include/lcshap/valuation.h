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

// Set functions over feature subsets. A ValueFunction turns a black-box
// classifier and one instance into v(S), the log-probability score of the
// model when it only sees the features in S. SyntheticGame is a plain lookup
// set function used as an oracle substrate in tests.

#ifndef LCSHAP_VALUATION_H_
#define LCSHAP_VALUATION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "lcshap/subset.h"

namespace lcshap {

// Probabilities are clamped to this floor before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr std::size_t kDefaultBatchSize = 256;

struct Instance {
  std::vector<double> values;
  std::vector<double> reference;

  std::size_t dimension() const { return values.size(); }
  // Throws DimensionError when values and reference differ in length.
  void validate() const;
};

// Black-box classifier. evaluate_batch returns, per input vector, the class
// log-probabilities.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::size_t num_classes() const = 0;
  virtual std::vector<std::vector<double>> evaluate_batch(
      std::span<const std::vector<double>> inputs) = 0;
  // Models that return false are only ever called from one thread at a time.
  virtual bool concurrent_safe() const { return false; }
};

// Throws EvaluationError unless every row has num_classes entries whose
// exponentials sum to 1 within 1e-6.
void check_log_probabilities(const std::vector<std::vector<double>>& rows,
                             std::size_t num_classes);

// Forwards to another model, validating every response.
class ValidatingModel : public Model {
 public:
  explicit ValidatingModel(Model& inner) : inner_(inner) {}
  std::size_t num_classes() const override { return inner_.num_classes(); }
  std::vector<std::vector<double>> evaluate_batch(
      std::span<const std::vector<double>> inputs) override;
  bool concurrent_safe() const override { return inner_.concurrent_safe(); }

 private:
  Model& inner_;
};

// Serializes calls into a model that is not safe for concurrent use.
class SerializedModel : public Model {
 public:
  explicit SerializedModel(Model& inner) : inner_(inner) {}
  std::size_t num_classes() const override { return inner_.num_classes(); }
  std::vector<std::vector<double>> evaluate_batch(
      std::span<const std::vector<double>> inputs) override;
  bool concurrent_safe() const override { return true; }

 private:
  Model& inner_;
  std::mutex mu_;
};

// Keeps x on `s` and takes the reference value everywhere else.
Instance plugin_masked_instance(const Instance& x, const FeatureSubset& s);

std::vector<double> softmax_from_log(const std::vector<double>& log_probs);

// Estimates P(y | x_S) by averaging model probabilities over `m_samples` pool
// rows drawn with replacement, each overwritten with x on `s`.
std::vector<double> empirical_conditional(const Instance& x, const FeatureSubset& s,
                                          Model& model,
                                          std::span<const Instance> pool,
                                          std::size_t m_samples, std::uint64_t seed);

// Produces class probability vectors P(y | x_S) for batches of subsets.
class ConditionalEstimator {
 public:
  virtual ~ConditionalEstimator() = default;
  virtual std::size_t num_features() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual std::vector<std::vector<double>> conditionals(
      std::span<const FeatureSubset> subsets) = 0;
};

class PluginEstimator : public ConditionalEstimator {
 public:
  PluginEstimator(Model& model, Instance x, std::size_t batch_size = kDefaultBatchSize);
  std::size_t num_features() const override { return x_.dimension(); }
  std::size_t num_classes() const override { return model_.num_classes(); }
  std::vector<std::vector<double>> conditionals(
      std::span<const FeatureSubset> subsets) override;

 private:
  Model& model_;
  Instance x_;
  std::size_t batch_size_;
};

// Draws its background sample once at construction and reuses it for every
// subset.
class EmpiricalEstimator : public ConditionalEstimator {
 public:
  EmpiricalEstimator(Model& model, Instance x, std::span<const Instance> pool,
                     std::size_t m_samples, std::uint64_t seed,
                     std::size_t batch_size = kDefaultBatchSize);
  std::size_t num_features() const override { return x_.dimension(); }
  std::size_t num_classes() const override { return model_.num_classes(); }
  std::vector<std::vector<double>> conditionals(
      std::span<const FeatureSubset> subsets) override;

 private:
  Model& model_;
  Instance x_;
  std::vector<std::vector<double>> background_;
  std::size_t batch_size_;
};

// A memoizing set function. Each distinct subset is computed once; the
// distinct count is the evaluation count reported by every attribution method.
class SetFunction {
 public:
  explicit SetFunction(std::size_t num_features) : num_features_(num_features) {}
  virtual ~SetFunction() = default;
  SetFunction(const SetFunction&) = delete;
  SetFunction& operator=(const SetFunction&) = delete;
  SetFunction(SetFunction&&) = default;
  SetFunction& operator=(SetFunction&&) = default;

  std::size_t num_features() const { return num_features_; }

  double value(const FeatureSubset& s);
  std::vector<double> values(std::span<const FeatureSubset> subsets);
  // Computes and caches any subsets not yet seen, in batches.
  void prefetch(std::span<const FeatureSubset> subsets);

  std::size_t distinct_evaluations() const;
  // Querying more than `budget` distinct subsets throws BudgetExceededError.
  void set_budget(std::size_t budget) { budget_ = budget; }
  std::size_t budget() const { return budget_; }

 protected:
  virtual std::vector<double> compute(std::span<const FeatureSubset> subsets) = 0;

 private:
  void check_subset(const FeatureSubset& s) const;

  std::size_t num_features_;
  std::size_t budget_ = std::numeric_limits<std::size_t>::max();
  std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
  std::unordered_map<FeatureSubset, double, FeatureSubsetHash> cache_;
};

enum class ScoreMode {
  // sum_y P(y|x) log P(y|x_S)
  kExpectedLogProb,
  // log P(y_hat|x_S), y_hat = argmax_y P(y|x), ties to the smallest index.
  kPredictedClassLogProb,
};

class ValueFunction : public SetFunction {
 public:
  ValueFunction(std::unique_ptr<ConditionalEstimator> estimator, ScoreMode mode);

  ScoreMode mode() const { return mode_; }
  std::size_t predicted_class() const { return predicted_class_; }
  // P(y | x), the conditional at the full feature set.
  const std::vector<double>& full_conditional() const { return full_conditional_; }
  ConditionalEstimator& estimator() { return *estimator_; }

 protected:
  std::vector<double> compute(std::span<const FeatureSubset> subsets) override;

 private:
  double score(const std::vector<double>& conditional) const;

  std::unique_ptr<ConditionalEstimator> estimator_;
  ScoreMode mode_;
  std::vector<double> full_conditional_;
  std::size_t predicted_class_ = 0;
};

ValueFunction make_plugin_value_function(Model& model, const Instance& x, ScoreMode mode,
                                         std::size_t batch_size = kDefaultBatchSize);

// v(s), memoized.
double importance_score(SetFunction& v, const FeatureSubset& s);

// v(s) - v(s \ {i}). Requires i in s.
double marginal_contribution(SetFunction& v, const FeatureSubset& s, std::size_t i);

// Lookup set function for oracles and tests.
class SyntheticGame : public SetFunction {
 public:
  using Fn = std::function<double(const FeatureSubset&)>;

  SyntheticGame(std::size_t d, Fn fn);

  // Table keyed by bit mask (d <= 20). A missing subset raises
  // ConfigurationError when it is first queried.
  static SyntheticGame from_table(std::size_t d,
                                  std::unordered_map<std::uint64_t, double> table);
  // Independent N(0,1) values on all 2^d subsets, v(empty) = 0.
  static SyntheticGame random(std::size_t d, std::uint64_t seed);
  // v(S) = base + sum_{j in S} coeffs[j].
  static SyntheticGame additive(std::vector<double> coeffs, double base = 0.0);
  static SyntheticGame constant(std::size_t d, double c);

 protected:
  std::vector<double> compute(std::span<const FeatureSubset> subsets) override;

 private:
  Fn fn_;
};

}  // namespace lcshap

#endif  // LCSHAP_VALUATION_H_
