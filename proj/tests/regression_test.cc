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

#include "lcshap/regression.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "lcshap/errors.h"

using namespace lcshap;

namespace {

double choose(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t j = 1; j <= k; ++j) r = r * static_cast<double>(n - k + j) / j;
  return r;
}

// Dense weighted normal equations by Gaussian elimination with partial pivoting.
std::vector<double> naive_solve(const DesignMatrix& dm, double base) {
  const std::size_t d = dm.dimension;
  std::vector<std::vector<double>> a(d, std::vector<double>(d + 1, 0.0));
  for (std::size_t r = 0; r < dm.size(); ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      if (!dm.rows[r].contains(i)) continue;
      for (std::size_t j = 0; j < d; ++j) {
        if (dm.rows[r].contains(j)) a[i][j] += dm.weights[r];
      }
      a[i][d] += dm.weights[r] * (dm.responses[r] - base);
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < d; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    std::swap(a[c], a[p]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j <= d; ++j) a[r][j] -= f * a[c][j];
    }
  }
  std::vector<double> x(d);
  for (std::size_t i = 0; i < d; ++i) x[i] = a[i][d] / a[i][i];
  return x;
}

std::vector<double> additive_coeffs(std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> c(d);
  for (double& x : c) x = normal(rng);
  return c;
}

}  // namespace

TEST_CASE("shapley_kernel_weight examples") {
  CHECK(shapley_kernel_weight(4, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(shapley_kernel_weight(4, 2) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK_THROWS_AS(shapley_kernel_weight(4, 0), PreconditionError);
  CHECK_THROWS_AS(shapley_kernel_weight(4, 4), PreconditionError);
  for (std::size_t d : {2u, 5u, 12u, 31u, 40u, 64u}) {
    for (std::size_t n = 1; n < d; ++n) {
      const double direct = (d - 1.0) / (choose(d, n) * n * (d - n));
      CHECK(shapley_kernel_weight(d, n) == doctest::Approx(direct).epsilon(1e-12));
      CHECK(shapley_kernel_weight(d, n) ==
            doctest::Approx(shapley_kernel_weight(d, d - n)).epsilon(1e-12));
    }
  }
}

TEST_CASE("weighted_least_squares examples") {
  DesignMatrix one;
  one.dimension = 1;
  one.rows = {FeatureSubset(1, {0})};
  one.responses = {3.25};
  one.weights = {0.7};
  CHECK(weighted_least_squares(one, 0.0).coefficients[0] == doctest::Approx(3.25));

  // Exactly linear responses are recovered whatever the weights.
  const std::vector<double> c{1.0, -2.0, 0.5, 4.0};
  DesignMatrix lin;
  lin.dimension = 4;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.1, 3.0);
  for (std::uint64_t m = 1; m < 16; ++m) {
    const auto s = FeatureSubset::from_mask(4, m);
    double y = 1.5;
    s.for_each([&](std::size_t i) { y += c[i]; });
    lin.rows.push_back(s);
    lin.responses.push_back(y);
    lin.weights.push_back(unit(rng));
  }
  const auto fit = weighted_least_squares(lin, 1.5);
  for (std::size_t i = 0; i < 4; ++i) CHECK(fit.coefficients[i] == doctest::Approx(c[i]));
  CHECK(fit.ridge_applied == 0.0);
}

TEST_CASE("weighted_least_squares against naive normal equations") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> mask(1, 15);
    std::uniform_real_distribution<double> unit(0.1, 2.0);
    std::normal_distribution<double> normal;
    DesignMatrix dm;
    dm.dimension = 4;
    for (int r = 0; r < 10; ++r) {
      dm.rows.push_back(FeatureSubset::from_mask(4, mask(rng)));
      dm.responses.push_back(normal(rng));
      dm.weights.push_back(unit(rng));
    }
    // Make the column space full rank.
    for (std::size_t i = 0; i < 4; ++i) {
      dm.rows.push_back(FeatureSubset(4, {i}));
      dm.responses.push_back(normal(rng));
      dm.weights.push_back(unit(rng));
    }
    const auto fit = weighted_least_squares(dm, 0.3);
    const auto oracle = naive_solve(dm, 0.3);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs(fit.coefficients[i] - oracle[i]) < 1e-8);
    }
    // Weighted residual is orthogonal to every column.
    for (std::size_t j = 0; j < 4; ++j) {
      double dot = 0.0;
      for (std::size_t r = 0; r < dm.size(); ++r) {
        double pred = 0.3;
        dm.rows[r].for_each([&](std::size_t i) { pred += fit.coefficients[i]; });
        if (dm.rows[r].contains(j)) dot += dm.weights[r] * (dm.responses[r] - pred);
      }
      CHECK(std::abs(dot) < 1e-9);
    }
  }
}

TEST_CASE("rank deficiency") {
  DesignMatrix dm;
  dm.dimension = 3;
  dm.rows = {FeatureSubset(3, {0, 1}), FeatureSubset(3, {2}), FeatureSubset(3, {0, 1, 2})};
  dm.responses = {1.0, 2.0, 3.0};
  dm.weights = {1.0, 1.0, 1.0};
  LeastSquaresOptions strict;
  strict.ridge = 0.0;
  try {
    weighted_least_squares(dm, 0.0, strict);
    FAIL("expected a singular system");
  } catch (const SingularSystemError& e) {
    CHECK(e.null_space_dim() == 1);
  }
  const auto fit = weighted_least_squares(dm, 0.0);
  CHECK(fit.ridge_applied > 0.0);
  CHECK(fit.coefficients[0] == doctest::Approx(fit.coefficients[1]).epsilon(1e-6));
  CHECK(fit.coefficients[2] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("efficiency constraint is met exactly") {
  DesignMatrix dm;
  dm.dimension = 3;
  dm.rows = {FeatureSubset(3, {0}), FeatureSubset(3, {1}), FeatureSubset(3, {2}),
             FeatureSubset(3, {0, 2})};
  dm.responses = {1.0, 0.5, -1.0, 0.7};
  dm.weights = {1.0, 2.0, 1.0, 0.5};
  LeastSquaresOptions opts;
  opts.efficiency_total = 2.0;
  const auto fit = weighted_least_squares(dm, 0.0, opts);
  CHECK(fit.coefficients[0] + fit.coefficients[1] + fit.coefficients[2] ==
        doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("kernelshap with the exhaustive design equals exact Shapley") {
  for (std::size_t d = 2; d <= 8; ++d) {
    auto game = SyntheticGame::random(d, 10 + d);
    auto oracle = SyntheticGame::random(d, 10 + d);
    const auto r = kernelshap(game, (std::size_t{1} << d) - 2, 0);
    CHECK(r.design.size() == (std::size_t{1} << d) - 2);
    std::set<std::uint64_t> rows;
    for (const auto& s : r.design.rows) rows.insert(s.mask());
    CHECK(rows.size() == r.design.size());
    const auto exact = exact_shapley(oracle).scores;
    for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(r.attribution.scores[i] - exact[i]) < 1e-6);
    CHECK(r.attribution.model_evaluations == std::size_t{1} << d);
  }
}

TEST_CASE("kernelshap sampling") {
  const auto c = additive_coeffs(12, 3);
  auto add = SyntheticGame::additive(c, 0.5);
  const auto r = kernelshap(add, 60, 7);
  CHECK(r.design.size() == 60);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(r.attribution.scores[i] == doctest::Approx(c[i]).epsilon(1e-8));
  }
  auto g1 = SyntheticGame::random(10, 4);
  auto g2 = SyntheticGame::random(10, 4);
  const auto a = kernelshap(g1, 40, 11);
  const auto b = kernelshap(g2, 40, 11);
  CHECK(a.attribution.scores == b.attribution.scores);
  CHECK(a.design.rows == b.design.rows);
  CHECK(a.attribution.model_evaluations <= 42);
  CHECK_THROWS_AS(kernelshap(g1, 9, 0), PreconditionError);
}

TEST_CASE("connected design rows") {
  CHECK(connected_design_rows(chain_graph(6), 3).size() == 6 + 5 + 4);
  CHECK(connected_design_rows(grid_graph(4, 4), 2).size() == 16 + 9);
  for (std::size_t d = 1; d <= 20; ++d) {
    for (std::size_t k = 1; k <= 5; ++k) {
      std::size_t intervals = 0;
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d && b - a < k; ++b) ++intervals;
      }
      CHECK(connected_design_rows(chain_graph(d), k).size() == intervals);
      CHECK(intervals <= k * d);
    }
  }
  CHECK_THROWS_AS(connected_design_rows(complete_graph(4), 2), UnsupportedTopologyError);
  CHECK_THROWS_AS(connected_design_rows(chain_graph(4), 0), PreconditionError);
}

TEST_CASE("regression_c_shapley recovers additive games") {
  for (std::size_t d : {2u, 7u, 16u, 64u}) {
    const auto c = additive_coeffs(d, d);
    for (std::size_t k : {1u, 2u, 4u}) {
      auto add = SyntheticGame::additive(c, -0.25);
      const auto r = regression_c_shapley(add, chain_graph(d), k);
      for (std::size_t i = 0; i < d; ++i) {
        CHECK(std::abs(r.attribution.scores[i] - c[i]) < 1e-8);
      }
      CHECK(r.attribution.order_k == std::optional<std::size_t>(k));
      CHECK(r.attribution.model_evaluations == r.design.size() + 1);
    }
  }
  const auto c = additive_coeffs(9, 1);
  auto add = SyntheticGame::additive(c);
  RegressionCShapleyOptions uniform;
  uniform.uniform_weights = true;
  const auto r = regression_c_shapley(add, grid_graph(3, 3), 2, uniform);
  for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(r.attribution.scores[i] - c[i]) < 1e-8);
  auto v = SyntheticGame::constant(4, 0.0);
  CHECK_THROWS_AS(regression_c_shapley(v, complete_graph(4), 2), UnsupportedTopologyError);
}

TEST_CASE("design csv") {
  auto add = SyntheticGame::additive({1.0, 2.0, 3.0});
  const auto r = regression_c_shapley(add, chain_graph(3), 1);
  std::ostringstream out;
  write_design_csv(r.design, out);
  const auto text = out.str();
  CHECK(text.rfind("f0,f1,f2,response,weight\n1,0,0,1,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}
