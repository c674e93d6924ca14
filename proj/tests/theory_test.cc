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

#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "lcshap/errors.h"
#include "lcshap/models.h"

using namespace lcshap;

namespace {

Rational choose(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  Rational r = 1;
  for (std::size_t j = 1; j <= k; ++j) r = r * Rational(n - k + j) / Rational(j);
  return r;
}

// I_a by explicit marginal dictionaries.
double direct_abs_mi(const DiscreteJoint& joint, std::uint64_t a, std::uint64_t b,
                     std::uint64_t z, bool with_label) {
  using Key = std::pair<std::uint64_t, std::size_t>;
  std::map<Key, double> pabz, paz, pbz, pz;
  const std::size_t c = joint.num_classes();
  const std::uint64_t n = std::uint64_t{1} << joint.num_features();
  for (std::uint64_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < c; ++y) {
      const double p = joint.mass(x, y);
      const std::size_t yy = with_label ? y : 0;
      pabz[{x & (a | b | z), yy}] += p;
      paz[{x & (a | z), yy}] += p;
      pbz[{x & (b | z), yy}] += p;
      pz[{x & z, yy}] += p;
    }
  }
  double total = 0.0;
  for (std::uint64_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < c; ++y) {
      const double p = joint.mass(x, y);
      if (p <= 0.0) continue;
      const std::size_t yy = with_label ? y : 0;
      const double cond_ab = pabz[{x & (a | b | z), yy}] / pz[{x & z, yy}];
      const double cond_a = paz[{x & (a | z), yy}] / pz[{x & z, yy}];
      const double cond_b = pbz[{x & (b | z), yy}] / pz[{x & z, yy}];
      total += p * std::abs(std::log(cond_ab / (cond_a * cond_b)));
    }
  }
  return total;
}

// Product of independent bits, with Y depending on feature 0 only.
DiscreteJoint label_on_first(std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.2, 0.8);
  std::vector<double> p(d), q(2);
  for (double& v : p) v = unit(rng);
  for (double& v : q) v = unit(rng);
  std::vector<double> table((std::size_t{1} << d) * 2);
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << d); ++x) {
    double px = 1.0;
    for (std::size_t j = 0; j < d; ++j) px *= (x >> j & 1) ? p[j] : 1.0 - p[j];
    const double y1 = q[x & 1];
    table[x * 2 + 0] = px * (1.0 - y1);
    table[x * 2 + 1] = px * y1;
  }
  return DiscreteJoint(d, 2, table);
}

}  // namespace

TEST_CASE("lemma1 examples") {
  for (std::size_t s = 0; s <= 6; ++s) {
    for (std::size_t t = 0; t <= s; ++t) {
      const auto r = lemma1_check(0, s, t);
      CHECK(r.lhs == 1 / choose(s, t));
      CHECK(r.equal);
    }
  }
  const auto r = lemma1_check(1, 1, 0);
  CHECK(r.lhs == Rational(3, 2));
  CHECK(r.rhs == Rational(3, 2));
  CHECK_THROWS_AS(lemma1_check(2, 1, 2), PreconditionError);
}

TEST_CASE("lemma1 holds exhaustively") {
  std::size_t failures = 0;
  for (std::size_t n = 0; n <= 12; ++n) {
    for (std::size_t s = 0; s <= 12; ++s) {
      for (std::size_t t = 0; t <= s; ++t) {
        const auto r = lemma1_check(n, s, t);
        // Both sides recomputed here with an independent binomial.
        Rational lhs = 0;
        for (std::size_t j = 0; j <= n; ++j) lhs += choose(n, j) / choose(n + s, j + t);
        const Rational rhs = Rational(s + 1 + n) / (Rational(s + 1) * choose(s, t));
        if (!r.equal || r.lhs != lhs || r.rhs != rhs || lhs != rhs) ++failures;
      }
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("DiscreteJoint validation") {
  CHECK_THROWS_AS(DiscreteJoint(2, 2, std::vector<double>(8, 0.1)), PreconditionError);
  CHECK_THROWS_AS(DiscreteJoint(2, 2, std::vector<double>(6, 1.0 / 6)), DimensionError);
  const auto j = DiscreteJoint::random(4, 3, 1);
  double total = 0.0;
  for (double p : j.table()) {
    CHECK(p > 0.0);
    total += p;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(DiscreteJoint::random(4, 3, 1).table() == j.table());
}

TEST_CASE("absolute mutual information") {
  const std::size_t d = 3;
  const auto indep = label_on_first(d, 2);
  for (bool y : {false, true}) {
    CHECK(absolute_mutual_information(indep, FeatureSubset(d, {1}), FeatureSubset(d, {2}),
                                      FeatureSubset(d), y) == doctest::Approx(0.0));
  }
  // Two perfectly correlated uniform bits.
  const DiscreteJoint twins(2, 1, {0.5, 0.0, 0.0, 0.5});
  CHECK(absolute_mutual_information(twins, FeatureSubset(2, {0}), FeatureSubset(2, {1}),
                                    FeatureSubset(2), false) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(absolute_mutual_information(twins, FeatureSubset(2, {0}),
                                              FeatureSubset(2, {0, 1}), FeatureSubset(2), false),
                  PreconditionError);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto j = DiscreteJoint::random(4, 2, seed);
    for (bool y : {false, true}) {
      const FeatureSubset a(4, {0}), b(4, {2, 3}), z(4, {1});
      const double ia = absolute_mutual_information(j, a, b, z, y);
      CHECK(ia == doctest::Approx(direct_abs_mi(j, a.mask(), b.mask(), z.mask(), y)).epsilon(1e-12));
      CHECK(ia == doctest::Approx(absolute_mutual_information(j, b, a, z, y)).epsilon(1e-12));
      CHECK(ia >= std::abs(mutual_information(j, a, b, z, y)) - 1e-15);
      CHECK(mutual_information(j, a, b, z, y) >= -1e-15);
    }
  }
}

TEST_CASE("exact conditional model") {
  // Y = parity of the two bits.
  std::vector<double> table(4 * 2, 0.0);
  for (std::uint64_t x = 0; x < 4; ++x) table[x * 2 + (std::popcount(x) & 1)] = 0.25;
  const DiscreteJoint parity(2, 2, table);
  ExactConditionalModel model(parity);
  for (std::uint64_t x = 0; x < 4; ++x) {
    const auto p = model.conditional(x, FeatureSubset::full(2));
    CHECK(p[std::popcount(x) & 1] == 1.0);
    CHECK(model.conditional(x, FeatureSubset(2))[0] == doctest::Approx(0.5));
  }

  const auto j = DiscreteJoint::random(4, 3, 9);
  ExactConditionalModel exact(j);
  for (std::uint64_t x = 0; x < 16; ++x) {
    for (std::uint64_t sm = 0; sm < 16; ++sm) {
      std::vector<double> num(3, 0.0);
      double den = 0.0;
      for (std::uint64_t x2 = 0; x2 < 16; ++x2) {
        if ((x2 & sm) != (x & sm)) continue;
        for (std::size_t y = 0; y < 3; ++y) {
          num[y] += j.mass(x2, y);
          den += j.mass(x2, y);
        }
      }
      const auto got = exact.conditional(x, FeatureSubset::from_mask(4, sm));
      for (std::size_t y = 0; y < 3; ++y) CHECK(std::abs(got[y] - num[y] / den) < 1e-12);
    }
  }

  const DiscreteJoint sparse(1, 2, {0.5, 0.5, 0.0, 0.0});
  ExactConditionalModel zero(sparse);
  CHECK_THROWS_AS(zero.conditional(1, FeatureSubset(1, {0})), ZeroMassError);
}

TEST_CASE("epsilon certificates") {
  const auto g = chain_graph(4);
  const auto indep = label_on_first(4, 5);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(epsilon_for_lshapley(indep, g, i, k_neighborhood(g, i, 1)).epsilon ==
          doctest::Approx(0.0));
    CHECK(epsilon_connected(indep, g, i, 1).epsilon == doctest::Approx(0.0));
  }

  // Three features where X2 copies X0 with noise, outside N_1(0) = {0, 1}.
  std::vector<double> table(8 * 2, 0.0);
  for (std::uint64_t x = 0; x < 8; ++x) {
    const int x0 = x & 1, x2 = x >> 2 & 1;
    const double px = 0.5 * 0.5 * (x0 == x2 ? 0.9 : 0.1);
    table[x * 2 + 0] = px * (x0 ? 0.3 : 0.6);
    table[x * 2 + 1] = px * (x0 ? 0.7 : 0.4);
  }
  const DiscreteJoint linked(3, 2, table);
  const auto cert = epsilon_for_lshapley(linked, chain_graph(3), 0, FeatureSubset(3, {0, 1}));
  double oracle = 0.0;
  for (std::uint64_t u : {0u, 2u}) {
    for (std::uint64_t v : {4u}) {
      for (bool y : {false, true}) oracle = std::max(oracle, direct_abs_mi(linked, 1, v, u, y));
    }
  }
  CHECK(cert.epsilon > 0.1);
  CHECK(cert.epsilon == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(cert.witness_v == FeatureSubset(3, {2}));

  CHECK_THROWS_AS(epsilon_for_lshapley(linked, chain_graph(3), 0, FeatureSubset(3, {1})),
                  PreconditionError);
  const auto big = DiscreteJoint::random(13, 2, 0);
  CHECK_THROWS_AS(epsilon_for_lshapley(big, chain_graph(13), 0, FeatureSubset(13, {0})),
                  BudgetExceededError);
}

TEST_CASE("theorem bounds on independent and constructed joints") {
  const auto g = chain_graph(5);
  const auto indep = label_on_first(5, 8);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto s = k_neighborhood(g, i, 1);
    const auto r1 = verify_theorem1(indep, g, i, 1, s);
    const auto r2 = verify_theorem2(indep, g, i, 1, s);
    CHECK(r1.expected_error < 1e-9);
    CHECK(r2.expected_error < 1e-9);
    CHECK(r1.holds);
    CHECK(r2.holds);
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = markov_label_model(seed, 6, 0.6);
    const auto chain = chain_graph(6);
    for (std::size_t i = 0; i < 6; ++i) {
      const auto s = k_neighborhood(chain, i, 1);
      CHECK(epsilon_for_lshapley(m.joint(), chain, i, s).epsilon < 1e-12);
      CHECK(verify_theorem1(m.joint(), chain, i, 1, s).expected_error < 1e-9);
      CHECK(verify_theorem2(m.joint(), chain, i, 1, s).expected_error < 1e-9);
    }
  }
}

TEST_CASE("theorem bounds on random joints") {
  const auto g = chain_graph(5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto j = DiscreteJoint::random(5, 2, seed);
    const std::size_t i = seed % 5;
    const auto s = best_local_set(j, g, i, 1);
    CHECK(s.contains(i));
    CHECK(s.is_subset_of(k_neighborhood(g, i, 1)));
    const auto r1 = verify_theorem1(j, g, i, 1, s);
    const auto r2 = verify_theorem2(j, g, i, 1, s);
    CHECK(r1.holds);
    CHECK(r2.holds);
    CHECK(r1.bound == doctest::Approx(4.0 * r1.certificate.epsilon));
    CHECK(r2.bound >= 6.0 * r1.certificate.epsilon - 1e-15);
    CHECK(r1.expected_error > 0.0);
  }
  CHECK_THROWS_AS(verify_theorem1(DiscreteJoint::random(5, 2, 0), g, 0, 1,
                                  FeatureSubset(5, {0, 3})),
                  PreconditionError);
}

TEST_CASE("theorem trials are reproducible") {
  TrialConfig config;
  config.trials = 8;
  config.seed = 42;
  const auto a = run_theorem_trials(config);
  const auto b = run_theorem_trials(config);
  REQUIRE(a.size() == 8);
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(to_json(a[t]).dump() == to_json(b[t]).dump());
    CHECK(a[t].holds);
    CHECK(a[t].seed == 42 + t);
  }
  config.theorem = 2;
  for (const auto& r : run_theorem_trials(config)) CHECK(r.holds);
}
