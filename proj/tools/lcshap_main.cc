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

// Command-line front end: explain, evaluate, lemma-check, theorem-check,
// bench and make-dataset.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lcshap/attribution.h"
#include "lcshap/errors.h"
#include "lcshap/external_model.h"
#include "lcshap/graph.h"
#include "lcshap/harness.h"
#include "lcshap/models.h"
#include "lcshap/regression.h"
#include "lcshap/theory.h"
#include "lcshap/valuation.h"

namespace {

using namespace lcshap;

struct ModelOptions {
  std::string spec = "builtin:nb";
  std::uint64_t model_seed = 0;
  double mixing = 0.5;
  std::size_t classes = 2;
  int timeout_ms = 10000;
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--model", m.spec,
                  "builtin:nb | builtin:markov | builtin:uniform | external:<command> | "
                  "external:tcp <host:port>")
      ->capture_default_str();
  cmd->add_option("--model-seed", m.model_seed, "seed of the built-in model")
      ->capture_default_str();
  cmd->add_option("--mixing", m.mixing, "mixing of builtin:markov")->capture_default_str();
  cmd->add_option("--classes", m.classes, "classes of builtin:uniform")->capture_default_str();
  cmd->add_option("--timeout-ms", m.timeout_ms, "external model timeout")->capture_default_str();
}

std::unique_ptr<Model> load_model(const ModelOptions& m, std::size_t d) {
  if (m.spec.rfind("builtin:", 0) == 0) {
    BuiltinModelOptions options;
    options.seed = m.model_seed;
    options.d = d;
    options.mixing = m.mixing;
    options.num_classes = m.classes;
    return make_builtin_model(m.spec.substr(8), options);
  }
  if (m.spec.rfind("external:", 0) == 0) {
    auto endpoint = parse_endpoint(m.spec.substr(9));
    endpoint.timeout = std::chrono::milliseconds(m.timeout_ms);
    return external_model(endpoint);
  }
  throw ConfigurationError("unknown model spec '" + m.spec + "'");
}

ScoreMode parse_mode(const std::string& mode) {
  if (mode == "expected") return ScoreMode::kExpectedLogProb;
  if (mode == "predicted") return ScoreMode::kPredictedClassLogProb;
  throw ConfigurationError("mode must be 'expected' or 'predicted'");
}

std::vector<double> parse_fractions(const std::string& csv) {
  std::vector<double> out;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigurationError("bad fraction '" + item + "'");
    }
  }
  return out;
}

// Writes to `path`, or stdout for "-" / empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path);
  out << text;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------- explain

struct ExplainArgs {
  ModelOptions model;
  std::string graph = "chain";
  std::string method = "l-shapley";
  std::size_t k = 1;
  std::string input;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<std::size_t> budget;
  std::string mode = "predicted";
  std::string rule = "neighborhood-myerson";
  std::string pool;
  std::size_t m_samples = 32;
  std::string design_csv;
  bool timing = false;
};

int run_explain(const ExplainArgs& a) {
  const auto j = read_json_file(a.input);
  Instance x;
  x.values = j.at("values").get<std::vector<double>>();
  x.reference = j.contains("reference") ? j.at("reference").get<std::vector<double>>()
                                        : std::vector<double>(x.values.size(), 0.0);
  x.validate();
  const std::size_t d = x.dimension();
  const FeatureGraph g = parse_graph_spec(a.graph, d);
  if (g.num_nodes() != d) throw DimensionError("graph size does not match the input");

  auto model = load_model(a.model, d);
  ValidatingModel checked(*model);
  std::unique_ptr<ConditionalEstimator> estimator;
  std::vector<Instance> pool;
  if (a.pool.empty()) {
    estimator = std::make_unique<PluginEstimator>(checked, x);
  } else {
    std::ifstream in(a.pool);
    if (!in) throw ConfigurationError("cannot read " + a.pool);
    for (auto& item : read_dataset_jsonl(in)) pool.push_back(std::move(item.x));
    estimator =
        std::make_unique<EmpiricalEstimator>(checked, x, pool, a.m_samples, a.seed);
  }
  ValueFunction v(std::move(estimator), parse_mode(a.mode));

  MethodSpec spec = parse_method_spec(a.method);
  spec.k = a.k;
  AttributionResult result;
  if (spec.method == Method::kCShapley) {
    CShapleyOptions options;
    options.rule = a.rule == "two-sided" ? CoefficientRule::kTwoSidedClosedForm
                                         : CoefficientRule::kNeighborhoodMyerson;
    if (a.rule != "two-sided" && a.rule != "neighborhood-myerson") {
      throw ConfigurationError("rule must be 'neighborhood-myerson' or 'two-sided'");
    }
    if (a.budget) v.set_budget(*a.budget);
    result = c_shapley_all(v, g, spec.k, options);
  } else if (!a.design_csv.empty() && (spec.method == Method::kCShapleyRegression ||
                                       spec.method == Method::kKernelShap)) {
    if (a.budget) v.set_budget(*a.budget);
    const auto reg = spec.method == Method::kKernelShap
                         ? kernelshap(v, a.budget.value_or(4 * d) - 2, a.seed)
                         : regression_c_shapley(v, g, spec.k);
    std::ostringstream csv;
    write_design_csv(reg.design, csv);
    emit(a.design_csv, csv.str());
    result = reg.attribution;
  } else {
    ExplainOptions options;
    options.budget = a.budget;
    options.seed = a.seed;
    result = explain(v, g, spec, options);
  }
  auto out = to_json(result, a.timing);
  out["d"] = d;
  out["graph"] = graph_to_json(g);
  out["mode"] = a.mode;
  out["predicted_class"] = v.predicted_class();
  emit(a.out, out.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  ModelOptions model;
  std::string dataset;
  std::string methods = "random,l-shapley:1,c-shapley-reg:4,kernelshap,sample";
  std::optional<std::size_t> budget;
  std::string fractions;
  std::string graph = "chain";
  std::string out;
  std::uint64_t seed = 0;
  bool correct_only = false;
  std::string mode = "predicted";
};

int run_evaluate(const EvaluateArgs& a) {
  std::ifstream in(a.dataset);
  if (!in) throw ConfigurationError("cannot read " + a.dataset);
  const auto data = read_dataset_jsonl(in);
  if (data.empty()) throw ConfigurationError("dataset is empty");
  const std::size_t d = data.front().x.dimension();
  for (const auto& item : data) {
    if (item.x.dimension() != d) throw DimensionError("dataset instances differ in length");
  }
  const FeatureGraph g = parse_graph_spec(a.graph, d);
  auto model = load_model(a.model, d);
  ValidatingModel checked(*model);
  const auto methods = parse_method_list(a.methods);

  CurveOptions options;
  if (!a.fractions.empty()) options.fractions = parse_fractions(a.fractions);
  options.seed = a.seed;
  options.correct_only = a.correct_only;
  options.mode = parse_mode(a.mode);
  const auto curves =
      compare_methods(checked, data, g, methods, a.budget.value_or(4 * d), options);

  std::ostringstream csv;
  write_curves_csv(curves, csv);
  emit(a.out, csv.str());
  for (const auto& c : curves) {
    std::cerr << c.method << ": evals=" << c.model_evaluations << " auc=" << area_under_curve(c)
              << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- lemma-check

int run_lemma_check(std::size_t max_n, std::size_t max_s, const std::string& out) {
  std::size_t checked = 0;
  nlohmann::json failures = nlohmann::json::array();
  for (std::size_t n = 0; n <= max_n; ++n) {
    for (std::size_t s = 0; s <= max_s; ++s) {
      for (std::size_t t = 0; t <= s; ++t) {
        const auto r = lemma1_check(n, s, t);
        ++checked;
        if (!r.equal) {
          failures.push_back({{"n", n}, {"s", s}, {"t", t}, {"lhs", r.lhs.str()},
                              {"rhs", r.rhs.str()}});
        }
      }
    }
  }
  nlohmann::json report{{"max_n", max_n},
                        {"max_s", max_s},
                        {"checked", checked},
                        {"failures", failures},
                        {"all_equal", failures.empty()}};
  emit(out, report.dump(2) + "\n");
  return failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------- theorem-check

int run_theorem_check(TrialConfig config, const std::string& theorem, const std::string& out) {
  std::vector<int> which;
  if (theorem == "1" || theorem == "both") which.push_back(1);
  if (theorem == "2" || theorem == "both") which.push_back(2);
  if (which.empty()) throw ConfigurationError("theorem must be 1, 2 or both");

  nlohmann::json trials = nlohmann::json::array();
  nlohmann::json summary = nlohmann::json::object();
  bool all_hold = true;
  for (int t : which) {
    config.theorem = t;
    const auto records = run_theorem_trials(config);
    std::size_t held = 0;
    double worst_slack = -1e300;
    for (const auto& r : records) {
      trials.push_back(to_json(r));
      held += r.holds ? 1 : 0;
      worst_slack = std::max(worst_slack, r.expected_error - r.bound);
    }
    all_hold = all_hold && held == records.size();
    summary["theorem" + std::to_string(t)] = {
        {"trials", records.size()}, {"holds", held}, {"max_error_minus_bound", worst_slack}};
  }
  nlohmann::json report{{"trials", trials},
                        {"summary", summary},
                        {"r_definition", "non_adjacent"},
                        {"value_mode", "expected"}};
  emit(out, report.dump(2) + "\n");
  return all_hold ? 0 : 1;
}

// ---------------------------------------------------------------- bench

// Cheap pseudo-random set function for counting: no table, any d.
class HashGame : public SetFunction {
 public:
  explicit HashGame(std::size_t d) : SetFunction(d) {}

 protected:
  std::vector<double> compute(std::span<const FeatureSubset> subsets) override {
    std::vector<double> out;
    out.reserve(subsets.size());
    for (const auto& s : subsets) {
      out.push_back(static_cast<double>(s.hash() % 1000003) / 1000003.0);
    }
    return out;
  }
};

int run_bench(const std::string& method_text, std::size_t d, std::size_t k,
              const std::string& graph, std::uint64_t seed, std::optional<std::size_t> budget) {
  const FeatureGraph g = parse_graph_spec(graph, d);
  MethodSpec spec = parse_method_spec(method_text);
  spec.k = k;
  HashGame v(g.num_nodes());
  ExplainOptions options;
  options.seed = seed;
  options.budget = budget;
  const auto result = explain(v, g, spec, options);
  const double dd = static_cast<double>(g.num_nodes());
  const double kk = static_cast<double>(k);

  nlohmann::json report{{"method", to_string(spec.method)},
                        {"d", g.num_nodes()},
                        {"k", k},
                        {"graph", graph_to_json(g)},
                        {"evals", result.model_evaluations}};
  nlohmann::json formulas = nlohmann::json::object();
  switch (spec.method) {
    case Method::kLShapley:
      formulas["2^(2k) d"] = std::pow(2.0, 2 * kk) * dd;
      formulas["2^(2k+1) per feature"] = std::pow(2.0, 2 * kk + 1);
      // Loose for grids: the Manhattan ball has 2k^2+2k+1 nodes, not 4k^2.
      if (g.kind() == GraphKind::kGrid) formulas["2^(4k^2) d"] = std::pow(2.0, 4 * kk * kk) * dd;
      break;
    case Method::kCShapley:
      formulas["k^2 d"] = kk * kk * dd;
      formulas["c = evals / (k^2 d)"] = static_cast<double>(result.model_evaluations) / (kk * kk * dd);
      break;
    case Method::kCShapleyRegression:
      formulas["k d"] = kk * dd;
      break;
    case Method::kExact:
    case Method::kMyerson:
      formulas["2^d"] = std::pow(2.0, dd);
      break;
    default:
      formulas["budget"] = static_cast<double>(budget.value_or(4 * g.num_nodes()));
      break;
  }
  report["formulas"] = formulas;
  std::cout << report.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------- make-dataset

int run_make_dataset(std::size_t docs, std::uint64_t seed, const std::string& out) {
  TopicCorpusConfig config;
  config.num_docs = docs;
  config.seed = seed;
  std::vector<LabeledInstance> data;
  for (const auto& doc : synthetic_topic_corpus(config)) {
    data.push_back({document_instance(doc), doc.label});
  }
  std::ostringstream text;
  write_dataset_jsonl(data, text);
  emit(out, text.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-structured Shapley attribution for black-box classifiers"};
  app.require_subcommand(1);

  ExplainArgs ex;
  auto* explain_cmd = app.add_subcommand("explain", "attribute one instance");
  add_model_options(explain_cmd, ex.model);
  explain_cmd->add_option("--graph", ex.graph, "chain | grid RxC")->capture_default_str();
  explain_cmd->add_option("--method", ex.method,
                          "exact | l-shapley | c-shapley | c-shapley-reg | sample | kernelshap | "
                          "myerson")
      ->capture_default_str();
  explain_cmd->add_option("--k", ex.k, "order")->capture_default_str();
  explain_cmd->add_option("--input", ex.input, "instance JSON {values, reference}")->required();
  explain_cmd->add_option("--seed", ex.seed)->capture_default_str();
  explain_cmd->add_option("--out", ex.out, "output JSON (default stdout)");
  explain_cmd->add_option("--budget", ex.budget, "distinct evaluations allowed");
  explain_cmd->add_option("--mode", ex.mode, "expected | predicted")->capture_default_str();
  explain_cmd->add_option("--rule", ex.rule, "C-Shapley weights: neighborhood-myerson | two-sided")
      ->capture_default_str();
  explain_cmd->add_option("--pool", ex.pool, "JSONL background pool (empirical estimator)");
  explain_cmd->add_option("--m", ex.m_samples, "empirical sample count")->capture_default_str();
  explain_cmd->add_option("--design-csv", ex.design_csv, "dump the regression design");
  explain_cmd->add_flag("--timing", ex.timing, "include elapsed_ms");

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "masking curves for several methods");
  add_model_options(evaluate_cmd, ev.model);
  evaluate_cmd->add_option("--dataset", ev.dataset, "JSONL dataset")->required();
  evaluate_cmd->add_option("--methods", ev.methods, "comma-separated methods")
      ->capture_default_str();
  evaluate_cmd->add_option("--budget", ev.budget, "evaluations per instance (default 4d)");
  evaluate_cmd->add_option("--fractions", ev.fractions, "comma-separated fractions");
  evaluate_cmd->add_option("--graph", ev.graph)->capture_default_str();
  evaluate_cmd->add_option("--out", ev.out, "output CSV (default stdout)");
  evaluate_cmd->add_option("--seed", ev.seed)->capture_default_str();
  evaluate_cmd->add_flag("--correct-only", ev.correct_only);
  evaluate_cmd->add_option("--mode", ev.mode)->capture_default_str();

  std::size_t max_n = 12;
  std::size_t max_s = 12;
  std::string lemma_out;
  auto* lemma_cmd = app.add_subcommand("lemma-check", "exact check of the binomial identity");
  lemma_cmd->add_option("--max-n", max_n)->capture_default_str();
  lemma_cmd->add_option("--max-s", max_s)->capture_default_str();
  lemma_cmd->add_option("--out", lemma_out);

  TrialConfig trials;
  std::string theorem = "both";
  std::string theorem_out;
  auto* theorem_cmd = app.add_subcommand("theorem-check", "random-joint error bound trials");
  theorem_cmd->add_option("--trials", trials.trials)->capture_default_str();
  theorem_cmd->add_option("--d", trials.d)->capture_default_str();
  theorem_cmd->add_option("--k", trials.k)->capture_default_str();
  theorem_cmd->add_option("--classes", trials.num_classes)->capture_default_str();
  theorem_cmd->add_option("--seed", trials.seed)->capture_default_str();
  theorem_cmd->add_option("--theorem", theorem, "1 | 2 | both")->capture_default_str();
  theorem_cmd->add_option("--out", theorem_out);

  std::string bench_method = "l-shapley";
  std::size_t bench_d = 16;
  std::size_t bench_k = 1;
  std::string bench_graph = "chain";
  std::uint64_t bench_seed = 0;
  std::optional<std::size_t> bench_budget;
  auto* bench_cmd = app.add_subcommand("bench", "evaluation counts against complexity formulas");
  bench_cmd->add_option("--method", bench_method)->capture_default_str();
  bench_cmd->add_option("--d", bench_d)->capture_default_str();
  bench_cmd->add_option("--k", bench_k)->capture_default_str();
  bench_cmd->add_option("--graph", bench_graph)->capture_default_str();
  bench_cmd->add_option("--seed", bench_seed)->capture_default_str();
  bench_cmd->add_option("--budget", bench_budget);

  std::size_t dataset_docs = 200;
  std::uint64_t dataset_seed = 1;
  std::string dataset_out;
  auto* dataset_cmd =
      app.add_subcommand("make-dataset", "write synthetic topic documents as JSONL");
  dataset_cmd->add_option("--docs", dataset_docs)->capture_default_str();
  dataset_cmd->add_option("--seed", dataset_seed)->capture_default_str();
  dataset_cmd->add_option("--out", dataset_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*explain_cmd) return run_explain(ex);
    if (*evaluate_cmd) return run_evaluate(ev);
    if (*lemma_cmd) return run_lemma_check(max_n, max_s, lemma_out);
    if (*theorem_cmd) return run_theorem_check(trials, theorem, theorem_out);
    if (*bench_cmd) {
      return run_bench(bench_method, bench_d, bench_k, bench_graph, bench_seed, bench_budget);
    }
    if (*dataset_cmd) return run_make_dataset(dataset_docs, dataset_seed, dataset_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
