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

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "lcshap/errors.h"
#include "lcshap/models.h"

using namespace lcshap;

namespace {

std::vector<LabeledInstance> topic_dataset(std::size_t n, std::uint64_t seed) {
  TopicCorpusConfig cfg;
  cfg.num_docs = n;
  cfg.seed = seed;
  std::vector<LabeledInstance> out;
  for (const auto& doc : synthetic_topic_corpus(cfg)) {
    out.push_back({document_instance(doc), doc.label});
  }
  return out;
}

NaiveBayesModel topic_model() {
  TopicCorpusConfig cfg;
  return train_naive_bayes(synthetic_topic_corpus(cfg), cfg.vocab_size);
}

}  // namespace

TEST_CASE("mask_top_features examples") {
  const Instance x{{1, 2, 3, 4}, {0, 0, 0, 0}};
  const std::vector<double> scores{0.9, 0.1, 0.5, 0.5};
  CHECK(mask_top_features(x, scores, 0.0).values == x.values);
  CHECK(mask_top_features(x, scores, 1.0).values == x.reference);
  CHECK(mask_top_features(x, scores, 0.5).values == std::vector<double>{0, 2, 0, 4});
  CHECK(mask_top_features(x, scores, 0.3).values == std::vector<double>{0, 2, 0, 4});
  CHECK(mask_top_features(x, scores, 0.25).values == std::vector<double>{0, 2, 3, 4});
  CHECK_THROWS_AS(mask_top_features(x, scores, 1.5), PreconditionError);
  CHECK_THROWS_AS(mask_top_features(x, scores, -0.1), PreconditionError);
  CHECK_THROWS_AS(mask_top_features(x, std::vector<double>{1.0}, 0.5), DimensionError);

  // Masked sets grow with the fraction.
  const Instance y{{1, 1, 1, 1, 1, 1, 1, 1, 1, 1}, std::vector<double>(10, 0.0)};
  const std::vector<double> s{3, 1, 4, 1, 5, 9, 2, 6, 5, 3};
  std::vector<double> prev = y.values;
  for (double f : kDefaultFractions) {
    const auto cur = mask_top_features(y, s, f).values;
    for (std::size_t j = 0; j < 10; ++j) CHECK(cur[j] <= prev[j]);
    prev = cur;
  }
}

TEST_CASE("method specs") {
  CHECK(parse_method_spec("random").kind == MethodSpec::Kind::kRandom);
  CHECK(parse_method_spec("l-shapley:2").k == 2);
  CHECK(parse_method_spec("c-shapley-reg").k == 4);
  CHECK(parse_method_spec("c-shapley-reg:4").label() == "c-shapley-reg:4");
  CHECK(parse_method_spec("kernelshap").label() == "kernelshap");
  CHECK_THROWS_AS(parse_method_spec("l-shapley:x"), ConfigurationError);
  CHECK(parse_method_list("random,l-shapley:1,sample").size() == 3);
  CHECK_THROWS_AS(parse_method_list(","), ConfigurationError);
}

TEST_CASE("explain enforces the budget") {
  auto v = SyntheticGame::random(8, 1);
  ExplainOptions opts;
  opts.budget = 10;
  try {
    explain(v, chain_graph(8), parse_method_spec("l-shapley:1"), opts);
    FAIL("expected a budget error");
  } catch (const BudgetExceededError& e) {
    CHECK(std::string(e.what()).rfind("l-shapley:1", 0) == 0);
  }
  auto w = SyntheticGame::random(8, 1);
  opts.budget = 32;
  const auto r = explain(w, chain_graph(8), parse_method_spec("l-shapley:1"), opts);
  CHECK(r.model_evaluations <= 32);
  CHECK_THROWS_AS(explain(w, chain_graph(8), parse_method_spec("random"), opts),
                  ConfigurationError);
}

TEST_CASE("constant model gives a flat curve") {
  UniformModel model(2);
  const auto data = topic_dataset(5, 2);
  CurveOptions opts;
  const auto curve = log_odds_curve(model, data, chain_graph(40), parse_method_spec("l-shapley:1"), opts);
  CHECK(curve.num_instances == 5);
  for (double c : curve.mean_log_odds_change) CHECK(c == 0.0);
  const auto rnd = log_odds_curve(model, data, chain_graph(40), parse_method_spec("random"), opts);
  for (double c : rnd.mean_log_odds_change) CHECK(c == 0.0);
}

TEST_CASE("curves on the topic corpus") {
  auto model = topic_model();
  const auto data = topic_dataset(20, 1);
  const auto g = chain_graph(40);
  const std::vector<MethodSpec> methods{parse_method_spec("random"),
                                        parse_method_spec("l-shapley:1")};
  CurveOptions opts;
  const auto curves = compare_methods(model, data, g, methods, 160, opts);
  REQUIRE(curves.size() == 2);
  CHECK(curves[0].mean_log_odds_change[0] == 0.0);
  for (std::size_t f = 2; f < kDefaultFractions.size(); ++f) {
    CHECK(curves[1].mean_log_odds_change[f] < curves[0].mean_log_odds_change[f]);
  }
  CHECK(curves[1].model_evaluations <= 160 * 20);
  CHECK(area_under_curve(curves[1]) < area_under_curve(curves[0]));

  std::ostringstream a, b;
  write_curves_csv(curves, a);
  write_curves_csv(compare_methods(model, data, g, methods, 160, opts), b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("method,fraction,mean_log_odds_change,n,seed\nrandom,0,0,20,0\n", 0) == 0);

  CHECK_THROWS_AS(compare_methods(model, data, g, methods, 39, opts), PreconditionError);
  const std::vector<MethodSpec> greedy{parse_method_spec("l-shapley:3")};
  try {
    compare_methods(model, data, g, greedy, 40, opts);
    FAIL("expected a budget error");
  } catch (const BudgetExceededError& e) {
    CHECK(std::string(e.what()).find("l-shapley:3") != std::string::npos);
  }
}

TEST_CASE("correct-only averaging") {
  auto model = topic_model();
  auto data = topic_dataset(10, 4);
  data[0].label = 1 - *data[0].label;
  std::size_t correct = 0;
  for (const auto& item : data) {
    const auto lp = model.evaluate_batch(std::span(&item.x.values, 1))[0];
    correct += (lp[1] > lp[0] ? 1u : 0u) == *item.label ? 1 : 0;
  }
  CurveOptions opts;
  opts.correct_only = true;
  const auto curve = log_odds_curve(model, data, chain_graph(40), parse_method_spec("random"), opts);
  CHECK(curve.num_instances == correct);
  CHECK(correct < 10);
  data[1].label.reset();
  CHECK_THROWS_AS(log_odds_curve(model, data, chain_graph(40), parse_method_spec("random"), opts),
                  ConfigurationError);
}

TEST_CASE("dataset jsonl round trip") {
  const auto data = topic_dataset(3, 0);
  std::ostringstream out;
  write_dataset_jsonl(data, out);
  std::istringstream in(out.str());
  const auto back = read_dataset_jsonl(in);
  REQUIRE(back.size() == 3);
  CHECK(back[2].x.values == data[2].x.values);
  CHECK(back[2].label == data[2].label);
  std::istringstream bad("{\"values\":[1,2],\"reference\":[0]}\n");
  CHECK_THROWS_AS(read_dataset_jsonl(bad), ConfigurationError);
  std::istringstream no_ref("\n{\"values\":[1,2]}\n");
  CHECK(read_dataset_jsonl(no_ref)[0].x.reference == std::vector<double>{0, 0});
}
