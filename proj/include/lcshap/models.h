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

// Built-in desk-scale models.

#ifndef LCSHAP_MODELS_H_
#define LCSHAP_MODELS_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lcshap/theory.h"
#include "lcshap/valuation.h"

namespace lcshap {

// Token id 0 is padding: it is the reference value for text and never counts
// as evidence.
inline constexpr int kPaddingToken = 0;

struct Document {
  std::vector<int> tokens;
  std::size_t label = 0;
};

// Multinomial naive Bayes over token ids 1..vocab_size-1. Because padding is
// ignored, plug-in masking with reference 0 is the same as conditioning on the
// remaining tokens.
class NaiveBayesModel : public Model {
 public:
  NaiveBayesModel(std::size_t vocab_size, std::vector<double> log_priors,
                  std::vector<std::vector<double>> log_likelihoods);

  std::size_t num_classes() const override { return log_priors_.size(); }
  std::size_t vocab_size() const { return vocab_size_; }
  std::vector<std::vector<double>> evaluate_batch(
      std::span<const std::vector<double>> inputs) override;
  bool concurrent_safe() const override { return true; }

  std::vector<double> log_posterior(std::span<const int> tokens) const;
  const std::vector<double>& log_priors() const { return log_priors_; }
  const std::vector<std::vector<double>>& log_likelihoods() const { return log_likelihoods_; }

 private:
  std::size_t vocab_size_;
  std::vector<double> log_priors_;
  std::vector<std::vector<double>> log_likelihoods_;
};

// Additive smoothing; the class count is one more than the largest label.
NaiveBayesModel train_naive_bayes(std::span<const Document> corpus, std::size_t vocab_size,
                                  double smoothing = 1.0);

nlohmann::json to_json(const NaiveBayesModel& model);
NaiveBayesModel naive_bayes_from_json(const nlohmann::json& j);

// Two topics. Each position independently draws a word of the document's own
// topic, a word of the other topic, or a neutral word.
struct TopicCorpusConfig {
  std::size_t num_docs = 500;
  std::size_t length = 40;
  std::size_t vocab_size = 120;
  std::size_t topic_words = 10;
  double topic_rate = 0.2;
  double counter_rate = 0.05;
  std::uint64_t seed = 0;
};

std::vector<Document> synthetic_topic_corpus(const TopicCorpusConfig& config);

// Token sequences as instances with an all-padding reference.
Instance document_instance(const Document& doc);

double accuracy(NaiveBayesModel& model, std::span<const Document> docs);

// Features come in adjacent pairs (0,1), (2,3), ...; a trailing odd feature
// forms its own block. Block b depends only on its own binary sub-label Y_b,
// and Y = sum_b Y_b 2^b. Blocks are independent, both marginally and given Y,
// so every feature is independent of everything outside its 1-neighbourhood
// given any subset of that neighbourhood. `mixing` scales the departure of
// each block table from uniform; mixing -> 0 gives i.i.d. fair bits.
class MarkovLabelModel : public Model {
 public:
  MarkovLabelModel(std::uint64_t seed, std::size_t d, double mixing);

  std::size_t num_features() const { return d_; }
  std::size_t num_classes() const override { return joint_.num_classes(); }
  std::size_t num_blocks() const { return block_priors_.size(); }
  const DiscreteJoint& joint() const { return joint_; }
  // P(Y_b = 1).
  const std::vector<double>& block_priors() const { return block_priors_; }
  // block_tables()[b][y_b] is a distribution over the block's bit patterns.
  const std::vector<std::vector<std::vector<double>>>& block_tables() const {
    return block_tables_;
  }

  // Exact posterior P(y | x) for 0/1 inputs.
  std::vector<std::vector<double>> evaluate_batch(
      std::span<const std::vector<double>> inputs) override;
  bool concurrent_safe() const override { return true; }

  // (x bit mask, label) draws from the joint.
  std::vector<std::pair<std::uint64_t, std::size_t>> sample(std::size_t n,
                                                            std::uint64_t seed) const;

 private:
  // Fills the block parameters, then returns their dense joint.
  DiscreteJoint build(std::uint64_t seed, double mixing);

  std::size_t d_;
  std::vector<double> block_priors_;
  std::vector<std::vector<std::vector<double>>> block_tables_;
  DiscreteJoint joint_;
};

inline constexpr std::size_t kMaxMarkovFeatures = 12;

MarkovLabelModel markov_label_model(std::uint64_t seed, std::size_t d, double mixing);

// softmax(W x + b); rows of W are classes.
class LinearSoftmaxModel : public Model {
 public:
  LinearSoftmaxModel(std::vector<std::vector<double>> weights, std::vector<double> bias);
  std::size_t num_classes() const override { return bias_.size(); }
  std::vector<std::vector<double>> evaluate_batch(
      std::span<const std::vector<double>> inputs) override;
  bool concurrent_safe() const override { return true; }

 private:
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
};

// Always returns log(1/C).
class UniformModel : public Model {
 public:
  explicit UniformModel(std::size_t num_classes);
  std::size_t num_classes() const override { return num_classes_; }
  std::vector<std::vector<double>> evaluate_batch(
      std::span<const std::vector<double>> inputs) override;
  bool concurrent_safe() const override { return true; }

 private:
  std::size_t num_classes_;
};

struct BuiltinModelOptions {
  // Corpus seed for "nb", table seed for "markov".
  std::uint64_t seed = 0;
  // Feature count for "markov".
  std::size_t d = 0;
  // Class count for "uniform".
  std::size_t num_classes = 2;
  double mixing = 0.5;
};

// "nb" (naive Bayes trained on the default topic corpus), "markov" or
// "uniform".
std::unique_ptr<Model> make_builtin_model(const std::string& name,
                                          const BuiltinModelOptions& options);

// log-sum-exp normalization of raw scores.
std::vector<double> log_normalize(std::vector<double> scores);

}  // namespace lcshap

#endif  // LCSHAP_MODELS_H_
