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

// Exact checks of the approximation theory: a combinatorial identity in
// rational arithmetic, absolute mutual information on dense discrete joints,
// and the expected-error bounds of L-Shapley and C-Shapley.

#ifndef LCSHAP_THEORY_H_
#define LCSHAP_THEORY_H_

#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "lcshap/attribution.h"
#include "lcshap/graph.h"
#include "lcshap/valuation.h"

namespace lcshap {

using Rational = boost::multiprecision::cpp_rational;

struct Lemma1Result {
  Rational lhs;
  Rational rhs;
  bool equal = false;
};

// lhs = sum_{j=0}^{n} C(n,j) / C(n+s, j+t), rhs = (s+1+n) / ((s+1) C(s,t)).
// Requires s >= t.
Lemma1Result lemma1_check(std::size_t n, std::size_t s, std::size_t t);

inline constexpr std::size_t kMaxJointFeatures = 16;

// Dense probability table over {0,1}^d x {0..C-1}. Atom (x, y) lives at
// index x * C + y, with bit j of x holding feature j.
class DiscreteJoint {
 public:
  DiscreteJoint(std::size_t num_features, std::size_t num_classes, std::vector<double> table);

  // Normalized exponential variates: strictly positive, seeded.
  static DiscreteJoint random(std::size_t num_features, std::size_t num_classes,
                              std::uint64_t seed);

  std::size_t num_features() const { return num_features_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t num_atoms() const { return table_.size(); }
  double mass(std::uint64_t x, std::size_t y) const { return table_[x * num_classes_ + y]; }
  const std::vector<double>& table() const { return table_; }
  // P(X = x), summed over labels.
  double feature_mass(std::uint64_t x) const;

 private:
  std::size_t num_features_;
  std::size_t num_classes_;
  std::vector<double> table_;
};

// E |log P(A,B|Z) / (P(A|Z) P(B|Z))| with Z = X_conditioning, plus Y when
// `condition_on_label`. Zero-mass atoms contribute nothing.
double absolute_mutual_information(const DiscreteJoint& joint, const FeatureSubset& group_a,
                                   const FeatureSubset& group_b,
                                   const FeatureSubset& conditioning,
                                   bool condition_on_label);

// The same expectation without the absolute value.
double mutual_information(const DiscreteJoint& joint, const FeatureSubset& group_a,
                          const FeatureSubset& group_b, const FeatureSubset& conditioning,
                          bool condition_on_label);

// P(Y | X_S = x_S) by marginalizing the joint. Marginal tables are cached per
// subset, so repeated queries over many instances stay cheap.
class ExactConditionalModel {
 public:
  explicit ExactConditionalModel(const DiscreteJoint& joint);

  const DiscreteJoint& joint() const { return joint_; }
  // Throws ZeroMassError when P(X_S = x_S) = 0.
  std::vector<double> conditional(std::uint64_t x, const FeatureSubset& s);

 private:
  const std::vector<double>& marginal(std::uint64_t s_mask);

  const DiscreteJoint& joint_;
  std::unordered_map<std::uint64_t, std::vector<double>> marginals_;
};

class ExactConditionalEstimator : public ConditionalEstimator {
 public:
  // `x` holds 0/1 feature values.
  ExactConditionalEstimator(ExactConditionalModel& model, std::uint64_t x);
  std::size_t num_features() const override { return model_.joint().num_features(); }
  std::size_t num_classes() const override { return model_.joint().num_classes(); }
  std::vector<std::vector<double>> conditionals(std::span<const FeatureSubset> subsets) override;

 private:
  ExactConditionalModel& model_;
  std::uint64_t x_;
};

ValueFunction make_exact_value_function(ExactConditionalModel& model, std::uint64_t x,
                                        ScoreMode mode = ScoreMode::kExpectedLogProb);

struct EpsilonCertificate {
  double epsilon = 0.0;
  FeatureSubset witness_u;
  FeatureSubset witness_v;
  bool conditioned_on_y = false;
};

inline constexpr std::size_t kMaxEpsilonFeatures = 12;
inline constexpr std::size_t kMaxVerifyFeatures = 10;

// sup of I_a(X_i; X_V | X_U [, Y]) over U in S \ {i}, nonempty V outside S.
EpsilonCertificate epsilon_for_lshapley(const DiscreteJoint& joint, const FeatureGraph& g,
                                        std::size_t i, const FeatureSubset& s);

// sup of I_a(X_i; X_V | X_{U \ {i}} [, Y]) over connected U containing i
// inside N_k(i) and nonempty V among the nodes not adjacent to U.
EpsilonCertificate epsilon_connected(const DiscreteJoint& joint, const FeatureGraph& g,
                                     std::size_t i, std::size_t k);

struct TheoremReport {
  EpsilonCertificate certificate;
  double expected_error = 0.0;
  double bound = 0.0;
  bool holds = false;
  // Probability of instances skipped because a conditioning event had no mass.
  double excluded_mass = 0.0;
};

// E_X |l_shapley - shapley| for feature i against 4 epsilon(S).
TheoremReport verify_theorem1(const DiscreteJoint& joint, const FeatureGraph& g, std::size_t i,
                              std::size_t k, const FeatureSubset& s);
// E_X |c_shapley - shapley| against 6 max(epsilon(S), epsilon_connected).
TheoremReport verify_theorem2(const DiscreteJoint& joint, const FeatureGraph& g, std::size_t i,
                              std::size_t k, const FeatureSubset& s,
                              const CShapleyOptions& options = {});

// The S in N_k(i), i in S, with the smallest epsilon_for_lshapley.
FeatureSubset best_local_set(const DiscreteJoint& joint, const FeatureGraph& g, std::size_t i,
                             std::size_t k);

struct TrialConfig {
  std::size_t trials = 200;
  std::size_t d = 6;
  std::size_t k = 1;
  std::size_t num_classes = 2;
  std::uint64_t seed = 0;
  int theorem = 1;
};

struct TrialRecord {
  std::uint64_t seed = 0;
  std::size_t d = 0;
  std::size_t k = 0;
  std::size_t i = 0;
  double epsilon = 0.0;
  double expected_error = 0.0;
  double bound = 0.0;
  bool holds = false;
  int theorem = 1;
};

// Random positive joints on a chain; trial t uses seed + t and a feature
// index drawn from that seed.
std::vector<TrialRecord> run_theorem_trials(const TrialConfig& config);

nlohmann::json to_json(const TrialRecord& record);

}  // namespace lcshap

#endif  // LCSHAP_THEORY_H_
