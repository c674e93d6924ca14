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

#include "lcshap/harness.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lcshap/errors.h"
#include "lcshap/regression.h"

namespace lcshap {

namespace {

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double floored(double log_prob) { return std::max(log_prob, std::log(kProbabilityFloor)); }

std::vector<double> random_scores(std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> out(d);
  for (double& s : out) s = unit(rng);
  return out;
}

AttributionResult run_method(SetFunction& v, const FeatureGraph& g, const MethodSpec& spec,
                             const ExplainOptions& options) {
  const std::size_t d = v.num_features();
  const std::size_t budget = options.budget.value_or(4 * d);
  switch (spec.method) {
    case Method::kExact:
      return exact_shapley(v, options.exact_limit);
    case Method::kLShapley:
      return l_shapley_all(v, g, spec.k);
    case Method::kCShapley:
      return c_shapley_all(v, g, spec.k);
    case Method::kCShapleyRegression:
      return regression_c_shapley(v, g, spec.k).attribution;
    case Method::kSampleShapley: {
      const std::size_t perms = d <= 1 ? 1 : std::max<std::size_t>(1, (budget - 2) / (d - 1));
      return sample_shapley(v, perms, options.seed);
    }
    case Method::kKernelShap:
      return kernelshap(v, std::max(budget, std::size_t{2}) - 2, options.seed).attribution;
    case Method::kMyerson:
      return myerson_value(v, g);
  }
  throw ConfigurationError("unknown method");
}

}  // namespace

std::vector<LabeledInstance> read_dataset_jsonl(std::istream& in) {
  std::vector<LabeledInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LabeledInstance item;
      item.x.values = j.at("values").get<std::vector<double>>();
      item.x.reference = j.contains("reference")
                             ? j.at("reference").get<std::vector<double>>()
                             : std::vector<double>(item.x.values.size(), 0.0);
      if (j.contains("label") && !j.at("label").is_null()) {
        item.label = j.at("label").get<std::size_t>();
      }
      item.x.validate();
      out.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigurationError("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DimensionError& e) {
      throw ConfigurationError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_dataset_jsonl(std::span<const LabeledInstance> data, std::ostream& out) {
  for (const auto& item : data) {
    nlohmann::json j{{"values", item.x.values}, {"reference", item.x.reference}};
    if (item.label) j["label"] = *item.label;
    out << j.dump() << '\n';
  }
}

Instance mask_top_features(const Instance& x, std::span<const double> scores, double fraction) {
  x.validate();
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw PreconditionError("fraction must lie in [0, 1]");
  }
  const std::size_t d = x.dimension();
  if (scores.size() != d) throw DimensionError("scores and instance differ in length");
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const auto count = std::min(
      d, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(d) - 1e-12)));
  FeatureSubset keep = FeatureSubset::full(d);
  for (std::size_t r = 0; r < count; ++r) keep.erase(order[r]);
  return plugin_masked_instance(x, keep);
}

std::string MethodSpec::label() const {
  if (kind == Kind::kRandom) return "random";
  switch (method) {
    case Method::kLShapley:
    case Method::kCShapley:
    case Method::kCShapleyRegression:
      return to_string(method) + ":" + std::to_string(k);
    default:
      return to_string(method);
  }
}

MethodSpec parse_method_spec(const std::string& text) {
  MethodSpec spec;
  if (text == "random") {
    spec.kind = MethodSpec::Kind::kRandom;
    return spec;
  }
  const auto colon = text.find(':');
  spec.method = parse_method(text.substr(0, colon));
  spec.k = spec.method == Method::kCShapleyRegression ? 4 : 1;
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      spec.k = std::stoul(text.substr(colon + 1), &used);
      if (used != text.size() - colon - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigurationError("bad order in method spec '" + text + "'");
    }
  }
  return spec;
}

std::vector<MethodSpec> parse_method_list(const std::string& csv) {
  std::vector<MethodSpec> out;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(parse_method_spec(item));
  }
  if (out.empty()) throw ConfigurationError("no methods given");
  return out;
}

AttributionResult explain(SetFunction& v, const FeatureGraph& g, const MethodSpec& spec,
                          const ExplainOptions& options) {
  if (spec.kind == MethodSpec::Kind::kRandom) {
    throw ConfigurationError("the random baseline has no attribution scores to explain");
  }
  if (g.num_nodes() != v.num_features()) {
    throw DimensionError("graph and set function disagree on the number of features");
  }
  const std::size_t saved = v.budget();
  if (options.budget) v.set_budget(v.distinct_evaluations() + *options.budget);
  try {
    AttributionResult result = run_method(v, g, spec, options);
    v.set_budget(saved);
    return result;
  } catch (const BudgetExceededError& e) {
    v.set_budget(saved);
    throw BudgetExceededError(spec.label() + ": " + e.what(), e.count());
  } catch (...) {
    v.set_budget(saved);
    throw;
  }
}

EvaluationCurve log_odds_curve(Model& model, std::span<const LabeledInstance> dataset,
                               const FeatureGraph& g, const MethodSpec& spec,
                               const CurveOptions& options) {
  if (dataset.empty()) throw PreconditionError("log_odds_curve needs a nonempty dataset");
  if (options.fractions.empty() || options.fractions.front() != 0.0 ||
      !std::is_sorted(options.fractions.begin(), options.fractions.end())) {
    throw PreconditionError("fractions must be increasing and start at 0");
  }
  EvaluationCurve curve;
  curve.method = spec.label();
  curve.fractions = options.fractions;
  curve.seed = options.seed;
  std::vector<double> sums(options.fractions.size(), 0.0);

  for (std::size_t j = 0; j < dataset.size(); ++j) {
    const Instance& x = dataset[j].x;
    try {
      const auto base = model.evaluate_batch(std::span(&x.values, 1)).at(0);
      const std::size_t y_hat = argmax(base);
      if (options.correct_only) {
        if (!dataset[j].label) {
          throw ConfigurationError("--correct-only needs labels on every instance");
        }
        if (*dataset[j].label != y_hat) continue;
      }

      std::vector<double> scores;
      const std::uint64_t seed = options.seed + j;
      if (spec.kind == MethodSpec::Kind::kRandom) {
        scores = random_scores(x.dimension(), seed);
      } else {
        ValueFunction v = make_plugin_value_function(model, x, options.mode, options.batch_size);
        ExplainOptions eo;
        eo.budget = options.budget;
        eo.seed = seed;
        const auto result = explain(v, g, spec, eo);
        scores = result.scores;
        curve.model_evaluations += result.model_evaluations;
      }

      std::vector<std::vector<double>> masked;
      masked.reserve(options.fractions.size());
      for (double f : options.fractions) masked.push_back(mask_top_features(x, scores, f).values);
      const auto after = model.evaluate_batch(masked);
      const double before = floored(base[y_hat]);
      for (std::size_t f = 0; f < options.fractions.size(); ++f) {
        if (masked[f] == x.values) continue;  // nothing masked, change is exactly 0
        sums[f] += floored(after[f].at(y_hat)) - before;
      }
      ++curve.num_instances;
    } catch (const EvaluationError& e) {
      throw EvaluationError("instance " + std::to_string(j) + ": " + e.what(), {j});
    }
  }
  curve.mean_log_odds_change.resize(sums.size(), 0.0);
  if (curve.num_instances > 0) {
    for (std::size_t f = 0; f < sums.size(); ++f) {
      curve.mean_log_odds_change[f] = sums[f] / static_cast<double>(curve.num_instances);
    }
  }
  return curve;
}

std::vector<EvaluationCurve> compare_methods(Model& model,
                                             std::span<const LabeledInstance> dataset,
                                             const FeatureGraph& g,
                                             std::span<const MethodSpec> methods,
                                             std::size_t budget, const CurveOptions& options) {
  if (budget < g.num_nodes()) {
    throw PreconditionError("budget " + std::to_string(budget) + " is below d = " +
                            std::to_string(g.num_nodes()));
  }
  CurveOptions shared = options;
  shared.budget = budget;
  std::vector<EvaluationCurve> out;
  out.reserve(methods.size());
  for (const auto& spec : methods) out.push_back(log_odds_curve(model, dataset, g, spec, shared));
  return out;
}

void write_curves_csv(std::span<const EvaluationCurve> curves, std::ostream& out) {
  out << "method,fraction,mean_log_odds_change,n,seed\n";
  std::ostringstream row;
  row.precision(12);
  for (const auto& c : curves) {
    for (std::size_t f = 0; f < c.fractions.size(); ++f) {
      row.str("");
      row << c.method << ',' << c.fractions[f] << ',' << c.mean_log_odds_change[f] << ','
          << c.num_instances << ',' << c.seed << '\n';
      out << row.str();
    }
  }
}

double area_under_curve(const EvaluationCurve& curve) {
  double area = 0.0;
  for (std::size_t f = 1; f < curve.fractions.size(); ++f) {
    area += 0.5 * (curve.fractions[f] - curve.fractions[f - 1]) *
            (curve.mean_log_odds_change[f] + curve.mean_log_odds_change[f - 1]);
  }
  return area;
}

}  // namespace lcshap
