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

#include "lcshap/models.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lcshap/errors.h"

namespace lcshap {

std::vector<double> log_normalize(std::vector<double> scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (double s : scores) total += std::exp(s - top);
  const double log_z = top + std::log(total);
  for (double& s : scores) s -= log_z;
  return scores;
}

NaiveBayesModel::NaiveBayesModel(std::size_t vocab_size, std::vector<double> log_priors,
                                 std::vector<std::vector<double>> log_likelihoods)
    : vocab_size_(vocab_size),
      log_priors_(std::move(log_priors)),
      log_likelihoods_(std::move(log_likelihoods)) {
  if (vocab_size_ < 2) throw ConfigurationError("naive Bayes needs vocab_size >= 2");
  if (log_priors_.empty() || log_likelihoods_.size() != log_priors_.size()) {
    throw ConfigurationError("naive Bayes priors and likelihood tables disagree on classes");
  }
  for (const auto& row : log_likelihoods_) {
    if (row.size() != vocab_size_) {
      throw ConfigurationError("naive Bayes likelihood row has the wrong vocabulary size");
    }
  }
}

std::vector<double> NaiveBayesModel::log_posterior(std::span<const int> tokens) const {
  std::vector<double> scores = log_priors_;
  for (int t : tokens) {
    if (t == kPaddingToken) continue;
    for (std::size_t c = 0; c < scores.size(); ++c) {
      scores[c] += log_likelihoods_[c][static_cast<std::size_t>(t)];
    }
  }
  return log_normalize(std::move(scores));
}

std::vector<std::vector<double>> NaiveBayesModel::evaluate_batch(
    std::span<const std::vector<double>> inputs) {
  std::vector<std::vector<double>> out;
  out.reserve(inputs.size());
  std::vector<int> tokens;
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    tokens.clear();
    for (double v : inputs[r]) {
      const double t = std::round(v);
      if (t != v || t < 0 || t >= static_cast<double>(vocab_size_)) {
        throw EvaluationError("naive Bayes input is not a token id in [0, " +
                                  std::to_string(vocab_size_) + ")",
                              {r});
      }
      tokens.push_back(static_cast<int>(t));
    }
    out.push_back(log_posterior(tokens));
  }
  return out;
}

NaiveBayesModel train_naive_bayes(std::span<const Document> corpus, std::size_t vocab_size,
                                  double smoothing) {
  if (corpus.empty()) throw ConfigurationError("cannot train naive Bayes on an empty corpus");
  if (!(smoothing > 0.0)) throw ConfigurationError("smoothing must be positive");
  std::size_t num_classes = 0;
  for (const auto& doc : corpus) num_classes = std::max(num_classes, doc.label + 1);

  std::vector<double> class_counts(num_classes, 0.0);
  std::vector<std::vector<double>> token_counts(num_classes, std::vector<double>(vocab_size, 0.0));
  for (const auto& doc : corpus) {
    class_counts[doc.label] += 1.0;
    for (int t : doc.tokens) {
      if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
        throw ConfigurationError("token id " + std::to_string(t) + " outside the vocabulary");
      }
      if (t != kPaddingToken) token_counts[doc.label][static_cast<std::size_t>(t)] += 1.0;
    }
  }

  std::vector<double> log_priors(num_classes);
  std::vector<std::vector<double>> log_likelihoods(num_classes, std::vector<double>(vocab_size));
  for (std::size_t c = 0; c < num_classes; ++c) {
    log_priors[c] = std::log(class_counts[c] / static_cast<double>(corpus.size()));
    double total = 0.0;
    for (std::size_t t = 1; t < vocab_size; ++t) total += token_counts[c][t] + smoothing;
    // Padding gets no mass; its entry is never read.
    log_likelihoods[c][kPaddingToken] = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 1; t < vocab_size; ++t) {
      log_likelihoods[c][t] = std::log((token_counts[c][t] + smoothing) / total);
    }
  }
  return NaiveBayesModel(vocab_size, std::move(log_priors), std::move(log_likelihoods));
}

nlohmann::json to_json(const NaiveBayesModel& model) {
  nlohmann::json likelihoods = nlohmann::json::array();
  for (const auto& row : model.log_likelihoods()) {
    // Drop the unused padding slot so the dump stays finite.
    likelihoods.push_back(std::vector<double>(row.begin() + 1, row.end()));
  }
  return {{"kind", "naive_bayes"},
          {"vocab_size", model.vocab_size()},
          {"log_priors", model.log_priors()},
          {"log_likelihoods", likelihoods}};
}

NaiveBayesModel naive_bayes_from_json(const nlohmann::json& j) {
  try {
    const auto vocab = j.at("vocab_size").get<std::size_t>();
    auto priors = j.at("log_priors").get<std::vector<double>>();
    std::vector<std::vector<double>> likelihoods;
    for (const auto& row : j.at("log_likelihoods")) {
      std::vector<double> full{-std::numeric_limits<double>::infinity()};
      const auto rest = row.get<std::vector<double>>();
      full.insert(full.end(), rest.begin(), rest.end());
      likelihoods.push_back(std::move(full));
    }
    return NaiveBayesModel(vocab, std::move(priors), std::move(likelihoods));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("malformed naive Bayes json: ") + e.what());
  }
}

std::vector<Document> synthetic_topic_corpus(const TopicCorpusConfig& config) {
  if (config.vocab_size < 2 * config.topic_words + 2 || config.topic_words == 0) {
    throw ConfigurationError("vocabulary too small for two topics plus neutral words");
  }
  if (config.topic_rate + config.counter_rate > 1.0) {
    throw ConfigurationError("topic_rate + counter_rate must not exceed 1");
  }
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> topic_word(0, static_cast<int>(config.topic_words) - 1);
  const int first_neutral = 1 + 2 * static_cast<int>(config.topic_words);
  std::uniform_int_distribution<int> neutral_word(first_neutral,
                                                  static_cast<int>(config.vocab_size) - 1);

  std::vector<Document> out(config.num_docs);
  for (auto& doc : out) {
    doc.label = coin(rng) ? 1 : 0;
    doc.tokens.reserve(config.length);
    for (std::size_t p = 0; p < config.length; ++p) {
      const double u = unit(rng);
      std::size_t topic;
      if (u < config.topic_rate) {
        topic = doc.label;
      } else if (u < config.topic_rate + config.counter_rate) {
        topic = 1 - doc.label;
      } else {
        doc.tokens.push_back(neutral_word(rng));
        continue;
      }
      doc.tokens.push_back(1 + static_cast<int>(topic * config.topic_words) + topic_word(rng));
    }
  }
  return out;
}

Instance document_instance(const Document& doc) {
  Instance x;
  x.values.assign(doc.tokens.begin(), doc.tokens.end());
  x.reference.assign(doc.tokens.size(), static_cast<double>(kPaddingToken));
  return x;
}

double accuracy(NaiveBayesModel& model, std::span<const Document> docs) {
  if (docs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& doc : docs) {
    const auto lp = model.log_posterior(doc.tokens);
    const auto best = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    if (best == doc.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(docs.size());
}

namespace {

std::size_t block_size(std::size_t d, std::size_t b) { return std::min<std::size_t>(2, d - 2 * b); }

std::vector<double> build_markov_table(std::size_t d, const std::vector<double>& priors,
                                       const std::vector<std::vector<std::vector<double>>>& tables) {
  const std::size_t blocks = priors.size();
  const std::size_t classes = std::size_t{1} << blocks;
  const std::uint64_t atoms = std::uint64_t{1} << d;
  std::vector<double> table(atoms * classes);
  for (std::uint64_t x = 0; x < atoms; ++x) {
    for (std::size_t y = 0; y < classes; ++y) {
      double p = 1.0;
      for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t yb = (y >> b) & 1U;
        const std::size_t pattern = (x >> (2 * b)) & ((std::uint64_t{1} << block_size(d, b)) - 1);
        p *= (yb == 1 ? priors[b] : 1.0 - priors[b]) * tables[b][yb][pattern];
      }
      table[x * classes + y] = p;
    }
  }
  // Renormalize away rounding so the joint passes its sum check exactly.
  double total = 0.0;
  for (double p : table) total += p;
  for (double& p : table) p /= total;
  return table;
}

struct MarkovParts {
  std::vector<double> priors;
  std::vector<std::vector<std::vector<double>>> tables;
};

MarkovParts draw_markov_parts(std::uint64_t seed, std::size_t d, double mixing) {
  if (d == 0 || d > kMaxMarkovFeatures) {
    throw DimensionError("markov_label_model needs 1 <= d <= " +
                         std::to_string(kMaxMarkovFeatures));
  }
  if (!(mixing >= 0.0 && mixing < 1.0)) {
    throw ConfigurationError("mixing must lie in [0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> prior(0.25, 0.75);
  std::exponential_distribution<double> draw(1.0);
  MarkovParts parts;
  const std::size_t blocks = (d + 1) / 2;
  for (std::size_t b = 0; b < blocks; ++b) {
    parts.priors.push_back(prior(rng));
    const std::size_t patterns = std::size_t{1} << block_size(d, b);
    std::vector<std::vector<double>> per_label;
    for (int yb = 0; yb < 2; ++yb) {
      std::vector<double> q(patterns);
      double total = 0.0;
      for (double& v : q) total += (v = draw(rng));
      const double uniform = 1.0 / static_cast<double>(patterns);
      for (double& v : q) v = uniform + mixing * (v / total - uniform);
      per_label.push_back(std::move(q));
    }
    parts.tables.push_back(std::move(per_label));
  }
  return parts;
}

}  // namespace

MarkovLabelModel::MarkovLabelModel(std::uint64_t seed, std::size_t d, double mixing)
    : d_(d), joint_(build(seed, mixing)) {}

DiscreteJoint MarkovLabelModel::build(std::uint64_t seed, double mixing) {
  auto parts = draw_markov_parts(seed, d_, mixing);
  block_priors_ = std::move(parts.priors);
  block_tables_ = std::move(parts.tables);
  return DiscreteJoint(d_, std::size_t{1} << block_priors_.size(),
                       build_markov_table(d_, block_priors_, block_tables_));
}

std::vector<std::vector<double>> MarkovLabelModel::evaluate_batch(
    std::span<const std::vector<double>> inputs) {
  std::vector<std::vector<double>> out;
  out.reserve(inputs.size());
  const std::size_t c = num_classes();
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    if (inputs[r].size() != d_) {
      throw EvaluationError("markov model expects " + std::to_string(d_) + " features", {r});
    }
    std::uint64_t x = 0;
    for (std::size_t j = 0; j < d_; ++j) {
      if (inputs[r][j] != 0.0 && inputs[r][j] != 1.0) {
        throw EvaluationError("markov model inputs must be 0 or 1", {r});
      }
      if (inputs[r][j] == 1.0) x |= std::uint64_t{1} << j;
    }
    const double px = joint_.feature_mass(x);
    std::vector<double> lp(c);
    for (std::size_t y = 0; y < c; ++y) {
      lp[y] = std::log(std::max(joint_.mass(x, y) / px, kProbabilityFloor));
    }
    out.push_back(log_normalize(std::move(lp)));
  }
  return out;
}

std::vector<std::pair<std::uint64_t, std::size_t>> MarkovLabelModel::sample(
    std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> draw(joint_.table().begin(), joint_.table().end());
  std::vector<std::pair<std::uint64_t, std::size_t>> out;
  out.reserve(n);
  const std::size_t c = num_classes();
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t atom = draw(rng);
    out.emplace_back(atom / c, atom % c);
  }
  return out;
}

MarkovLabelModel markov_label_model(std::uint64_t seed, std::size_t d, double mixing) {
  return MarkovLabelModel(seed, d, mixing);
}

LinearSoftmaxModel::LinearSoftmaxModel(std::vector<std::vector<double>> weights,
                                       std::vector<double> bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (bias_.empty() || weights_.size() != bias_.size()) {
    throw ConfigurationError("linear model weights and bias disagree on classes");
  }
  for (const auto& row : weights_) {
    if (row.size() != weights_.front().size()) {
      throw ConfigurationError("linear model weight rows differ in length");
    }
  }
}

std::vector<std::vector<double>> LinearSoftmaxModel::evaluate_batch(
    std::span<const std::vector<double>> inputs) {
  std::vector<std::vector<double>> out;
  out.reserve(inputs.size());
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    if (inputs[r].size() != weights_.front().size()) {
      throw EvaluationError("linear model input has the wrong length", {r});
    }
    std::vector<double> scores = bias_;
    for (std::size_t c = 0; c < scores.size(); ++c) {
      for (std::size_t j = 0; j < inputs[r].size(); ++j) scores[c] += weights_[c][j] * inputs[r][j];
    }
    out.push_back(log_normalize(std::move(scores)));
  }
  return out;
}

UniformModel::UniformModel(std::size_t num_classes) : num_classes_(num_classes) {
  if (num_classes == 0) throw ConfigurationError("uniform model needs at least one class");
}

std::vector<std::vector<double>> UniformModel::evaluate_batch(
    std::span<const std::vector<double>> inputs) {
  return std::vector<std::vector<double>>(
      inputs.size(),
      std::vector<double>(num_classes_, -std::log(static_cast<double>(num_classes_))));
}

std::unique_ptr<Model> make_builtin_model(const std::string& name,
                                          const BuiltinModelOptions& options) {
  if (name == "nb") {
    TopicCorpusConfig config;
    config.seed = options.seed;
    const auto corpus = synthetic_topic_corpus(config);
    return std::make_unique<NaiveBayesModel>(train_naive_bayes(corpus, config.vocab_size));
  }
  if (name == "markov") {
    return std::make_unique<MarkovLabelModel>(options.seed, options.d, options.mixing);
  }
  if (name == "uniform") return std::make_unique<UniformModel>(options.num_classes);
  throw ConfigurationError("unknown built-in model '" + name + "'");
}

}  // namespace lcshap
