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

#include "lcshap/valuation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "lcshap/errors.h"

namespace lcshap {

void Instance::validate() const {
  if (values.size() != reference.size()) {
    throw DimensionError("instance has " + std::to_string(values.size()) +
                         " values but " + std::to_string(reference.size()) +
                         " reference entries");
  }
}

void check_log_probabilities(const std::vector<std::vector<double>>& rows,
                             std::size_t num_classes) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != num_classes) {
      throw EvaluationError("model returned " + std::to_string(rows[r].size()) +
                                " log-probabilities, expected " +
                                std::to_string(num_classes),
                            {r});
    }
    double total = 0.0;
    for (double lp : rows[r]) total += std::exp(lp);
    if (!(std::abs(total - 1.0) <= 1e-6)) {
      throw EvaluationError("model output " + std::to_string(r) +
                                " is not a distribution (mass " +
                                std::to_string(total) + ")",
                            {r});
    }
  }
}

std::vector<std::vector<double>> ValidatingModel::evaluate_batch(
    std::span<const std::vector<double>> inputs) {
  auto out = inner_.evaluate_batch(inputs);
  if (out.size() != inputs.size()) {
    std::vector<std::size_t> all(inputs.size());
    std::iota(all.begin(), all.end(), 0);
    throw EvaluationError("model returned " + std::to_string(out.size()) +
                              " rows for " + std::to_string(inputs.size()) + " inputs",
                          std::move(all));
  }
  check_log_probabilities(out, inner_.num_classes());
  return out;
}

std::vector<std::vector<double>> SerializedModel::evaluate_batch(
    std::span<const std::vector<double>> inputs) {
  std::lock_guard<std::mutex> lock(mu_);
  return inner_.evaluate_batch(inputs);
}

Instance plugin_masked_instance(const Instance& x, const FeatureSubset& s) {
  x.validate();
  if (s.dimension() != x.dimension()) {
    throw DimensionError("subset dimension " + std::to_string(s.dimension()) +
                         " does not match instance dimension " +
                         std::to_string(x.dimension()));
  }
  Instance out{x.reference, x.reference};
  s.for_each([&](std::size_t i) { out.values[i] = x.values[i]; });
  return out;
}

std::vector<double> softmax_from_log(const std::vector<double>& log_probs) {
  std::vector<double> p(log_probs.size());
  std::transform(log_probs.begin(), log_probs.end(), p.begin(),
                 [](double lp) { return std::exp(lp); });
  return p;
}

namespace {

std::vector<std::vector<double>> evaluate_probabilities(
    Model& model, const std::vector<std::vector<double>>& inputs,
    std::size_t batch_size) {
  std::vector<std::vector<double>> out;
  out.reserve(inputs.size());
  const std::span<const std::vector<double>> all(inputs);
  for (std::size_t start = 0; start < inputs.size(); start += batch_size) {
    const auto chunk = all.subspan(start, std::min(batch_size, inputs.size() - start));
    auto log_probs = model.evaluate_batch(chunk);
    if (log_probs.size() != chunk.size()) {
      std::vector<std::size_t> idx(chunk.size());
      std::iota(idx.begin(), idx.end(), start);
      throw EvaluationError("model returned a short batch", std::move(idx));
    }
    check_log_probabilities(log_probs, model.num_classes());
    for (auto& row : log_probs) out.push_back(softmax_from_log(row));
  }
  return out;
}

std::vector<std::vector<double>> draw_background(std::span<const Instance> pool,
                                                 std::size_t m_samples,
                                                 std::uint64_t seed) {
  if (pool.empty()) throw ConfigurationError("empirical estimator needs a nonempty pool");
  if (m_samples == 0) throw ConfigurationError("empirical estimator needs m_samples >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<std::vector<double>> out;
  out.reserve(m_samples);
  for (std::size_t j = 0; j < m_samples; ++j) out.push_back(pool[pick(rng)].values);
  return out;
}

std::vector<std::vector<double>> average_over_background(
    Model& model, const Instance& x, const std::vector<std::vector<double>>& background,
    std::span<const FeatureSubset> subsets, std::size_t batch_size) {
  const std::size_t m = background.size();
  std::vector<std::vector<double>> inputs;
  inputs.reserve(subsets.size() * m);
  for (const auto& s : subsets) {
    for (const auto& row : background) {
      if (row.size() != x.dimension()) {
        throw DimensionError("pool row dimension does not match instance");
      }
      std::vector<double> filled = row;
      s.for_each([&](std::size_t i) { filled[i] = x.values[i]; });
      inputs.push_back(std::move(filled));
    }
  }
  const auto probs = evaluate_probabilities(model, inputs, batch_size);
  std::vector<std::vector<double>> out(subsets.size(),
                                       std::vector<double>(model.num_classes(), 0.0));
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    for (std::size_t j = 0; j < m; ++j) {
      const auto& p = probs[s * m + j];
      for (std::size_t c = 0; c < p.size(); ++c) out[s][c] += p[c];
    }
    for (double& c : out[s]) c /= static_cast<double>(m);
  }
  return out;
}

}  // namespace

std::vector<double> empirical_conditional(const Instance& x, const FeatureSubset& s,
                                          Model& model, std::span<const Instance> pool,
                                          std::size_t m_samples, std::uint64_t seed) {
  const auto background = draw_background(pool, m_samples, seed);
  const FeatureSubset subsets[] = {s};
  return average_over_background(model, x, background, subsets, kDefaultBatchSize)[0];
}

PluginEstimator::PluginEstimator(Model& model, Instance x, std::size_t batch_size)
    : model_(model), x_(std::move(x)), batch_size_(std::max<std::size_t>(batch_size, 1)) {
  x_.validate();
}

std::vector<std::vector<double>> PluginEstimator::conditionals(
    std::span<const FeatureSubset> subsets) {
  std::vector<std::vector<double>> inputs;
  inputs.reserve(subsets.size());
  for (const auto& s : subsets) inputs.push_back(plugin_masked_instance(x_, s).values);
  return evaluate_probabilities(model_, inputs, batch_size_);
}

EmpiricalEstimator::EmpiricalEstimator(Model& model, Instance x,
                                       std::span<const Instance> pool,
                                       std::size_t m_samples, std::uint64_t seed,
                                       std::size_t batch_size)
    : model_(model),
      x_(std::move(x)),
      background_(draw_background(pool, m_samples, seed)),
      batch_size_(std::max<std::size_t>(batch_size, 1)) {}

std::vector<std::vector<double>> EmpiricalEstimator::conditionals(
    std::span<const FeatureSubset> subsets) {
  return average_over_background(model_, x_, background_, subsets, batch_size_);
}

void SetFunction::check_subset(const FeatureSubset& s) const {
  if (s.dimension() != num_features_) {
    throw DimensionError("subset of dimension " + std::to_string(s.dimension()) +
                         " queried on a set function over " +
                         std::to_string(num_features_) + " features");
  }
}

double SetFunction::value(const FeatureSubset& s) {
  check_subset(s);
  {
    std::lock_guard<std::mutex> lock(*mu_);
    if (auto it = cache_.find(s); it != cache_.end()) return it->second;
  }
  const FeatureSubset one[] = {s};
  prefetch(one);
  std::lock_guard<std::mutex> lock(*mu_);
  return cache_.at(s);
}

std::vector<double> SetFunction::values(std::span<const FeatureSubset> subsets) {
  prefetch(subsets);
  std::vector<double> out;
  out.reserve(subsets.size());
  std::lock_guard<std::mutex> lock(*mu_);
  for (const auto& s : subsets) out.push_back(cache_.at(s));
  return out;
}

void SetFunction::prefetch(std::span<const FeatureSubset> subsets) {
  std::vector<FeatureSubset> missing;
  {
    std::lock_guard<std::mutex> lock(*mu_);
    std::unordered_map<FeatureSubset, bool, FeatureSubsetHash> pending;
    for (const auto& s : subsets) {
      check_subset(s);
      if (!cache_.contains(s) && pending.emplace(s, true).second) missing.push_back(s);
    }
    if (missing.empty()) return;
    if (cache_.size() + missing.size() > budget_) {
      throw BudgetExceededError("evaluation budget of " + std::to_string(budget_) +
                                    " distinct subsets exceeded (would reach " +
                                    std::to_string(cache_.size() + missing.size()) + ")",
                                cache_.size() + missing.size());
    }
  }
  const auto computed = compute(missing);
  std::lock_guard<std::mutex> lock(*mu_);
  for (std::size_t j = 0; j < missing.size(); ++j) {
    cache_.emplace(std::move(missing[j]), computed[j]);
  }
}

std::size_t SetFunction::distinct_evaluations() const {
  std::lock_guard<std::mutex> lock(*mu_);
  return cache_.size();
}

ValueFunction::ValueFunction(std::unique_ptr<ConditionalEstimator> estimator,
                             ScoreMode mode)
    : SetFunction(estimator->num_features()), estimator_(std::move(estimator)), mode_(mode) {
  const FeatureSubset full[] = {FeatureSubset::full(num_features())};
  full_conditional_ = estimator_->conditionals(full).at(0);
  // Ties resolve to the smallest class index.
  predicted_class_ = static_cast<std::size_t>(
      std::max_element(full_conditional_.begin(), full_conditional_.end()) -
      full_conditional_.begin());
}

double ValueFunction::score(const std::vector<double>& conditional) const {
  auto safe_log = [](double p) { return std::log(std::max(p, kProbabilityFloor)); };
  if (mode_ == ScoreMode::kPredictedClassLogProb) {
    return safe_log(conditional.at(predicted_class_));
  }
  double total = 0.0;
  for (std::size_t y = 0; y < conditional.size(); ++y) {
    if (full_conditional_[y] > 0.0) total += full_conditional_[y] * safe_log(conditional[y]);
  }
  return total;
}

std::vector<double> ValueFunction::compute(std::span<const FeatureSubset> subsets) {
  const FeatureSubset full = FeatureSubset::full(num_features());
  std::vector<FeatureSubset> to_query;
  for (const auto& s : subsets) {
    if (s != full) to_query.push_back(s);
  }
  std::vector<std::vector<double>> queried;
  try {
    queried = estimator_->conditionals(to_query);
  } catch (const EvaluationError& e) {
    std::string context = "while evaluating subsets";
    for (std::size_t idx : e.indices()) {
      if (idx < to_query.size()) context += " " + to_query[idx].to_string();
    }
    throw EvaluationError(std::string(e.what()) + " (" + context + ")", e.indices());
  }
  std::vector<double> out;
  out.reserve(subsets.size());
  std::size_t next = 0;
  for (const auto& s : subsets) {
    out.push_back(score(s == full ? full_conditional_ : queried.at(next++)));
  }
  return out;
}

ValueFunction make_plugin_value_function(Model& model, const Instance& x, ScoreMode mode,
                                         std::size_t batch_size) {
  return ValueFunction(std::make_unique<PluginEstimator>(model, x, batch_size), mode);
}

double importance_score(SetFunction& v, const FeatureSubset& s) { return v.value(s); }

double marginal_contribution(SetFunction& v, const FeatureSubset& s, std::size_t i) {
  if (!s.contains(i)) {
    throw PreconditionError("marginal contribution needs feature " + std::to_string(i) +
                            " to be in " + s.to_string());
  }
  const FeatureSubset pair[] = {s, s.without(i)};
  const auto vals = v.values(pair);
  return vals[0] - vals[1];
}

SyntheticGame::SyntheticGame(std::size_t d, Fn fn) : SetFunction(d), fn_(std::move(fn)) {}

SyntheticGame SyntheticGame::from_table(std::size_t d,
                                        std::unordered_map<std::uint64_t, double> table) {
  if (d > 20) throw DimensionError("tabled games are limited to d <= 20");
  return SyntheticGame(d, [table = std::move(table)](const FeatureSubset& s) {
    const auto it = table.find(s.mask());
    if (it == table.end()) {
      throw ConfigurationError("synthetic game has no entry for subset " + s.to_string());
    }
    return it->second;
  });
}

SyntheticGame SyntheticGame::random(std::size_t d, std::uint64_t seed) {
  if (d > 20) throw DimensionError("random tabled games are limited to d <= 20");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::unordered_map<std::uint64_t, double> table;
  const std::uint64_t n = std::uint64_t{1} << d;
  table.reserve(n);
  table[0] = 0.0;
  for (std::uint64_t mask = 1; mask < n; ++mask) table[mask] = normal(rng);
  return from_table(d, std::move(table));
}

SyntheticGame SyntheticGame::additive(std::vector<double> coeffs, double base) {
  const std::size_t d = coeffs.size();
  return SyntheticGame(d, [coeffs = std::move(coeffs), base](const FeatureSubset& s) {
    double total = base;
    s.for_each([&](std::size_t i) { total += coeffs[i]; });
    return total;
  });
}

SyntheticGame SyntheticGame::constant(std::size_t d, double c) {
  return SyntheticGame(d, [c](const FeatureSubset&) { return c; });
}

std::vector<double> SyntheticGame::compute(std::span<const FeatureSubset> subsets) {
  std::vector<double> out;
  out.reserve(subsets.size());
  for (const auto& s : subsets) out.push_back(fn_(s));
  return out;
}

}  // namespace lcshap
