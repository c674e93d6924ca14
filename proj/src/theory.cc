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

#include "lcshap/theory.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "lcshap/errors.h"

namespace lcshap {

namespace {

using boost::multiprecision::cpp_int;

cpp_int exact_binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  cpp_int out = 1;
  for (std::size_t j = 1; j <= k; ++j) {
    out *= n - k + j;
    out /= j;
  }
  return out;
}

// Marginal over the features in `mask` (and the label if `with_label`),
// indexed by (x & mask) * classes + y.
std::vector<double> marginal_table(const DiscreteJoint& joint, std::uint64_t mask,
                                   bool with_label) {
  const std::size_t c = joint.num_classes();
  const std::size_t width = with_label ? c : 1;
  const std::uint64_t n = std::uint64_t{1} << joint.num_features();
  std::vector<double> out(n * width, 0.0);
  for (std::uint64_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < c; ++y) {
      out[(x & mask) * width + (with_label ? y : 0)] += joint.mass(x, y);
    }
  }
  return out;
}

template <typename Term>
double information_sum(const DiscreteJoint& joint, const FeatureSubset& a,
                       const FeatureSubset& b, const FeatureSubset& z, bool with_label,
                       Term term) {
  const std::size_t d = joint.num_features();
  for (const auto* s : {&a, &b, &z}) {
    if (s->dimension() != d) throw DimensionError("subset dimension does not match joint");
  }
  if (a.intersects(b) || a.intersects(z) || b.intersects(z)) {
    throw PreconditionError("information groups and conditioning set must be disjoint");
  }
  const std::uint64_t am = a.mask();
  const std::uint64_t bm = b.mask();
  const std::uint64_t zm = z.mask();
  const auto p_abz = marginal_table(joint, am | bm | zm, with_label);
  const auto p_az = marginal_table(joint, am | zm, with_label);
  const auto p_bz = marginal_table(joint, bm | zm, with_label);
  const auto p_z = marginal_table(joint, zm, with_label);

  const std::size_t c = joint.num_classes();
  const std::size_t width = with_label ? c : 1;
  const std::uint64_t n = std::uint64_t{1} << d;
  double total = 0.0;
  for (std::uint64_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < c; ++y) {
      const double p = joint.mass(x, y);
      if (p <= 0.0) continue;
      const std::size_t yy = with_label ? y : 0;
      // P(a,b|z) / (P(a|z) P(b|z)) = P(a,b,z) P(z) / (P(a,z) P(b,z)).
      const double ratio = p_abz[(x & (am | bm | zm)) * width + yy] * p_z[(x & zm) * width + yy] /
                           (p_az[(x & (am | zm)) * width + yy] * p_bz[(x & (bm | zm)) * width + yy]);
      total += p * term(std::log(ratio));
    }
  }
  return total;
}

void check_epsilon_size(const DiscreteJoint& joint) {
  if (joint.num_features() > kMaxEpsilonFeatures) {
    throw BudgetExceededError("epsilon search is exhaustive and limited to d <= " +
                                  std::to_string(kMaxEpsilonFeatures),
                              joint.num_features());
  }
}

// Raises `cert` to the larger of I_a with and without the label.
void consider(const DiscreteJoint& joint, const FeatureSubset& target, const FeatureSubset& u,
              const FeatureSubset& v, EpsilonCertificate& cert) {
  for (bool with_label : {true, false}) {
    const double ia = absolute_mutual_information(joint, target, v, u, with_label);
    if (ia > cert.epsilon) {
      cert.epsilon = ia;
      cert.witness_u = u;
      cert.witness_v = v;
      cert.conditioned_on_y = with_label;
    }
  }
}

// Calls fn on every subset of `pool`.
template <typename Fn>
void for_each_subset(const FeatureSubset& pool, Fn fn) {
  const std::vector<std::size_t> members = pool.members();
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << members.size()); ++m) {
    FeatureSubset s(pool.dimension());
    for (std::size_t j = 0; j < members.size(); ++j) {
      if ((m >> j) & 1U) s.insert(members[j]);
    }
    fn(s);
  }
}

template <typename Estimate>
TheoremReport expected_error(const DiscreteJoint& joint, std::size_t i, Estimate estimate) {
  if (joint.num_features() > kMaxVerifyFeatures) {
    throw BudgetExceededError("theorem verification is exhaustive and limited to d <= " +
                                  std::to_string(kMaxVerifyFeatures),
                              joint.num_features());
  }
  ExactConditionalModel model(joint);
  TheoremReport report;
  const std::uint64_t n = std::uint64_t{1} << joint.num_features();
  for (std::uint64_t x = 0; x < n; ++x) {
    const double px = joint.feature_mass(x);
    if (px <= 0.0) continue;
    try {
      ValueFunction v = make_exact_value_function(model, x);
      const double exact = exact_shapley(v, kMaxVerifyFeatures).scores[i];
      report.expected_error += px * std::abs(estimate(v) - exact);
    } catch (const ZeroMassError&) {
      report.excluded_mass += px;
    }
  }
  return report;
}

}  // namespace

Lemma1Result lemma1_check(std::size_t n, std::size_t s, std::size_t t) {
  if (s < t) {
    throw PreconditionError("lemma1_check requires s >= t (got s = " + std::to_string(s) +
                            ", t = " + std::to_string(t) + ")");
  }
  Lemma1Result r;
  for (std::size_t j = 0; j <= n; ++j) {
    r.lhs += Rational(exact_binomial(n, j), exact_binomial(n + s, j + t));
  }
  r.rhs = Rational(cpp_int(s + 1 + n), cpp_int(s + 1) * exact_binomial(s, t));
  r.equal = r.lhs == r.rhs;
  return r;
}

DiscreteJoint::DiscreteJoint(std::size_t num_features, std::size_t num_classes,
                             std::vector<double> table)
    : num_features_(num_features), num_classes_(num_classes), table_(std::move(table)) {
  if (num_features == 0 || num_features > kMaxJointFeatures) {
    throw DimensionError("joint needs 1 <= d <= " + std::to_string(kMaxJointFeatures));
  }
  if (num_classes == 0) throw DimensionError("joint needs at least one class");
  if (table_.size() != (std::size_t{1} << num_features) * num_classes) {
    throw DimensionError("joint table must have 2^d * C entries");
  }
  double total = 0.0;
  for (double p : table_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw PreconditionError("joint masses must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw PreconditionError("joint masses must sum to 1 (got " + std::to_string(total) + ")");
  }
}

DiscreteJoint DiscreteJoint::random(std::size_t num_features, std::size_t num_classes,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> draw(1.0);
  std::vector<double> table((std::size_t{1} << num_features) * num_classes);
  double total = 0.0;
  for (double& p : table) {
    p = draw(rng);
    total += p;
  }
  for (double& p : table) p /= total;
  return DiscreteJoint(num_features, num_classes, std::move(table));
}

double DiscreteJoint::feature_mass(std::uint64_t x) const {
  double total = 0.0;
  for (std::size_t y = 0; y < num_classes_; ++y) total += mass(x, y);
  return total;
}

double absolute_mutual_information(const DiscreteJoint& joint, const FeatureSubset& group_a,
                                   const FeatureSubset& group_b,
                                   const FeatureSubset& conditioning,
                                   bool condition_on_label) {
  return information_sum(joint, group_a, group_b, conditioning, condition_on_label,
                         [](double l) { return std::abs(l); });
}

double mutual_information(const DiscreteJoint& joint, const FeatureSubset& group_a,
                          const FeatureSubset& group_b, const FeatureSubset& conditioning,
                          bool condition_on_label) {
  return information_sum(joint, group_a, group_b, conditioning, condition_on_label,
                         [](double l) { return l; });
}

ExactConditionalModel::ExactConditionalModel(const DiscreteJoint& joint) : joint_(joint) {}

const std::vector<double>& ExactConditionalModel::marginal(std::uint64_t s_mask) {
  auto it = marginals_.find(s_mask);
  if (it == marginals_.end()) {
    it = marginals_.emplace(s_mask, marginal_table(joint_, s_mask, true)).first;
  }
  return it->second;
}

std::vector<double> ExactConditionalModel::conditional(std::uint64_t x, const FeatureSubset& s) {
  if (s.dimension() != joint_.num_features()) {
    throw DimensionError("subset dimension does not match joint");
  }
  const std::uint64_t key = x & s.mask();
  const auto& table = marginal(s.mask());
  const std::size_t c = joint_.num_classes();
  std::vector<double> out(table.begin() + static_cast<std::ptrdiff_t>(key * c),
                          table.begin() + static_cast<std::ptrdiff_t>((key + 1) * c));
  double total = 0.0;
  for (double p : out) total += p;
  if (total <= 0.0) {
    std::string values;
    s.for_each([&](std::size_t j) {
      values += (values.empty() ? "" : ",") + std::to_string((x >> j) & 1U);
    });
    throw ZeroMassError("conditioning event has zero mass: S = " + s.to_string() +
                        ", x_S = (" + values + ")");
  }
  for (double& p : out) p /= total;
  return out;
}

ExactConditionalEstimator::ExactConditionalEstimator(ExactConditionalModel& model,
                                                     std::uint64_t x)
    : model_(model), x_(x) {}

std::vector<std::vector<double>> ExactConditionalEstimator::conditionals(
    std::span<const FeatureSubset> subsets) {
  std::vector<std::vector<double>> out;
  out.reserve(subsets.size());
  for (const auto& s : subsets) out.push_back(model_.conditional(x_, s));
  return out;
}

ValueFunction make_exact_value_function(ExactConditionalModel& model, std::uint64_t x,
                                        ScoreMode mode) {
  return ValueFunction(std::make_unique<ExactConditionalEstimator>(model, x), mode);
}

EpsilonCertificate epsilon_for_lshapley(const DiscreteJoint& joint, const FeatureGraph& g,
                                        std::size_t i, const FeatureSubset& s) {
  check_epsilon_size(joint);
  const std::size_t d = joint.num_features();
  if (g.num_nodes() != d || s.dimension() != d) {
    throw DimensionError("graph, subset and joint disagree on the number of features");
  }
  if (!s.contains(i)) throw PreconditionError("S must contain i");
  const FeatureSubset target(d, {i});
  EpsilonCertificate cert{0.0, FeatureSubset(d), FeatureSubset(d), false};
  const FeatureSubset outside = s.complement();
  for_each_subset(s.without(i), [&](const FeatureSubset& u) {
    for_each_subset(outside, [&](const FeatureSubset& v) {
      if (!v.empty()) consider(joint, target, u, v, cert);
    });
  });
  return cert;
}

EpsilonCertificate epsilon_connected(const DiscreteJoint& joint, const FeatureGraph& g,
                                     std::size_t i, std::size_t k) {
  check_epsilon_size(joint);
  const std::size_t d = joint.num_features();
  if (g.num_nodes() != d) {
    throw DimensionError("graph and joint disagree on the number of features");
  }
  const FeatureSubset target(d, {i});
  EpsilonCertificate cert{0.0, FeatureSubset(d), FeatureSubset(d), false};
  for (const auto& u : connected_subsets_containing(g, i, k)) {
    const FeatureSubset far = (u | g.boundary(u)).complement();
    const FeatureSubset given = u.without(i);
    for_each_subset(far, [&](const FeatureSubset& v) {
      if (!v.empty()) consider(joint, target, given, v, cert);
    });
  }
  return cert;
}

FeatureSubset best_local_set(const DiscreteJoint& joint, const FeatureGraph& g, std::size_t i,
                             std::size_t k) {
  const FeatureSubset nbhd = k_neighborhood(g, i, k);
  FeatureSubset best = nbhd;
  double best_eps = epsilon_for_lshapley(joint, g, i, nbhd).epsilon;
  std::vector<FeatureSubset> candidates;
  for_each_subset(nbhd.without(i), [&](const FeatureSubset& t) { candidates.push_back(t.with(i)); });
  std::sort(candidates.begin(), candidates.end(), canonical_less);
  for (const auto& s : candidates) {
    const double eps = epsilon_for_lshapley(joint, g, i, s).epsilon;
    if (eps < best_eps) {
      best_eps = eps;
      best = s;
    }
  }
  return best;
}

TheoremReport verify_theorem1(const DiscreteJoint& joint, const FeatureGraph& g, std::size_t i,
                              std::size_t k, const FeatureSubset& s) {
  if (!s.is_subset_of(k_neighborhood(g, i, k))) {
    throw PreconditionError("S must lie inside N_k(i)");
  }
  const auto cert = epsilon_for_lshapley(joint, g, i, s);
  TheoremReport report =
      expected_error(joint, i, [&](SetFunction& v) { return l_shapley(v, g, i, k); });
  report.certificate = cert;
  report.bound = 4.0 * cert.epsilon;
  report.holds = report.expected_error <= report.bound + 1e-9;
  return report;
}

TheoremReport verify_theorem2(const DiscreteJoint& joint, const FeatureGraph& g, std::size_t i,
                              std::size_t k, const FeatureSubset& s,
                              const CShapleyOptions& options) {
  if (!s.is_subset_of(k_neighborhood(g, i, k))) {
    throw PreconditionError("S must lie inside N_k(i)");
  }
  auto cert = epsilon_for_lshapley(joint, g, i, s);
  const auto connected = epsilon_connected(joint, g, i, k);
  if (connected.epsilon > cert.epsilon) cert = connected;
  TheoremReport report = expected_error(
      joint, i, [&](SetFunction& v) { return c_shapley(v, g, i, k, options); });
  report.certificate = cert;
  report.bound = 6.0 * cert.epsilon;
  report.holds = report.expected_error <= report.bound + 1e-9;
  return report;
}

std::vector<TrialRecord> run_theorem_trials(const TrialConfig& config) {
  if (config.theorem != 1 && config.theorem != 2) {
    throw ConfigurationError("theorem must be 1 or 2");
  }
  const FeatureGraph g = chain_graph(config.d);
  std::vector<TrialRecord> out;
  out.reserve(config.trials);
  for (std::size_t t = 0; t < config.trials; ++t) {
    TrialRecord rec;
    rec.seed = config.seed + t;
    rec.d = config.d;
    rec.k = config.k;
    rec.theorem = config.theorem;
    std::mt19937_64 rng(rec.seed);
    rec.i = std::uniform_int_distribution<std::size_t>(0, config.d - 1)(rng);
    const DiscreteJoint joint = DiscreteJoint::random(config.d, config.num_classes, rng());
    const FeatureSubset s = best_local_set(joint, g, rec.i, config.k);
    const TheoremReport report = config.theorem == 1
                                     ? verify_theorem1(joint, g, rec.i, config.k, s)
                                     : verify_theorem2(joint, g, rec.i, config.k, s);
    rec.epsilon = report.certificate.epsilon;
    rec.expected_error = report.expected_error;
    rec.bound = report.bound;
    rec.holds = report.holds;
    out.push_back(rec);
  }
  return out;
}

nlohmann::json to_json(const TrialRecord& record) {
  return {{"seed", record.seed},
          {"d", record.d},
          {"k", record.k},
          {"i", record.i},
          {"epsilon", record.epsilon},
          {"expected_error", record.expected_error},
          {"bound", record.bound},
          {"holds", record.holds},
          {"theorem", record.theorem}};
}

}  // namespace lcshap
