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

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include "lcshap/errors.h"

namespace lcshap {

namespace {

using Clock = std::chrono::steady_clock;

Eigen::MatrixXd indicator_matrix(const DesignMatrix& design) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(design.size()),
                                            static_cast<Eigen::Index>(design.dimension));
  for (std::size_t r = 0; r < design.size(); ++r) {
    design.rows[r].for_each(
        [&](std::size_t j) { x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = 1.0; });
  }
  return x;
}

// Solves (X^T W X) beta = X^T W y, falling back to a ridge on singularity.
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& w,
                                       const Eigen::VectorXd& y,
                                       const std::optional<double>& ridge,
                                       double& ridge_applied) {
  const Eigen::Index n = x.cols();
  Eigen::MatrixXd normal = x.transpose() * w.asDiagonal() * x;
  const Eigen::VectorXd rhs = x.transpose() * (w.array() * y.array()).matrix();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double top = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
  const double tol = 1e-12 * std::max(top, 1e-300);
  const auto null_dim = static_cast<std::size_t>(
      (eig.eigenvalues().array() <= tol).count());

  ridge_applied = 0.0;
  if (null_dim > 0) {
    const double r = ridge.value_or(1e-10 * normal.trace() / static_cast<double>(n));
    if (!(r > 0.0)) {
      throw SingularSystemError("normal matrix is singular with null-space dimension " +
                                    std::to_string(null_dim) + " and ridge is 0",
                                null_dim);
    }
    normal.diagonal().array() += r;
    ridge_applied = r;
  }
  return normal.ldlt().solve(rhs);
}

double log_binomial(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

FeatureSubset random_subset(std::size_t d, std::size_t size, std::mt19937_64& rng,
                            std::vector<std::size_t>& scratch) {
  std::iota(scratch.begin(), scratch.end(), 0);
  for (std::size_t j = 0; j < size; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, d - 1);
    std::swap(scratch[j], scratch[pick(rng)]);
  }
  return FeatureSubset(d, std::span<const std::size_t>(scratch.data(), size));
}

struct Stratum {
  std::size_t size;
  double mass;   // kernel weight summed over the whole stratum
  double count;  // C(d, size)
  std::size_t alloc = 0;
  bool enumerated = false;
};

void enumerate_size(std::size_t d, std::size_t size, std::vector<FeatureSubset>& out) {
  std::vector<bool> pick(d, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(size), true);
  // prev_permutation over a descending-sorted selector walks subsets in
  // lexicographic member order.
  do {
    FeatureSubset s(d);
    for (std::size_t j = 0; j < d; ++j) {
      if (pick[j]) s.insert(j);
    }
    out.push_back(std::move(s));
  } while (std::prev_permutation(pick.begin(), pick.end()));
}

RegressionResult fit_design(SetFunction& v, DesignMatrix design, Method method,
                            bool efficiency, const std::optional<double>& ridge,
                            std::size_t start_evals, Clock::time_point start) {
  const std::size_t d = v.num_features();
  const FeatureSubset empty(d);
  const FeatureSubset full = FeatureSubset::full(d);
  std::vector<FeatureSubset> queries{empty};
  if (efficiency) queries.push_back(full);
  queries.insert(queries.end(), design.rows.begin(), design.rows.end());
  v.prefetch(queries);

  design.responses = v.values(design.rows);
  const double base = v.value(empty);
  LeastSquaresOptions ls;
  ls.ridge = ridge;
  if (efficiency) ls.efficiency_total = v.value(full) - base;

  RegressionResult out;
  out.fit = weighted_least_squares(design, base, ls);
  out.attribution.method = method;
  out.attribution.scores = out.fit.coefficients;
  out.attribution.model_evaluations = v.distinct_evaluations() - start_evals;
  out.attribution.elapsed = Clock::now() - start;
  out.design = std::move(design);
  return out;
}

}  // namespace

void DesignMatrix::validate() const {
  if (responses.size() != rows.size() || weights.size() != rows.size()) {
    throw DimensionError("design rows, responses and weights differ in length");
  }
  for (const auto& r : rows) {
    if (r.dimension() != dimension) throw DimensionError("design row has wrong dimension");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw PreconditionError("design weights must be positive and finite");
    }
  }
}

void write_design_csv(const DesignMatrix& design, std::ostream& out) {
  for (std::size_t j = 0; j < design.dimension; ++j) out << 'f' << j << ',';
  out << "response,weight\n";
  const auto old_precision = out.precision(17);
  for (std::size_t r = 0; r < design.size(); ++r) {
    for (std::size_t j = 0; j < design.dimension; ++j) {
      out << (design.rows[r].contains(j) ? '1' : '0') << ',';
    }
    out << (r < design.responses.size() ? design.responses[r] : 0.0) << ','
        << design.weights[r] << '\n';
  }
  out.precision(old_precision);
}

double shapley_kernel_weight(std::size_t d, std::size_t subset_size) {
  if (subset_size == 0 || subset_size >= d) {
    throw PreconditionError("Shapley kernel weight is undefined for subset size " +
                            std::to_string(subset_size) + " with d = " + std::to_string(d));
  }
  const auto n = static_cast<double>(subset_size);
  const auto dd = static_cast<double>(d);
  if (d > 30) {
    return std::exp(std::log(dd - 1.0) - log_binomial(d, subset_size) - std::log(n) -
                    std::log(dd - n));
  }
  return (dd - 1.0) / (binomial(d, subset_size) * n * (dd - n));
}

LeastSquaresFit weighted_least_squares(const DesignMatrix& design, double base,
                                       const LeastSquaresOptions& options) {
  design.validate();
  const std::size_t d = design.dimension;
  if (d == 0) throw DimensionError("design has no features");
  if (design.size() == 0 && !(options.efficiency_total && d == 1)) {
    throw PreconditionError("design has no rows");
  }
  if (options.ridge && *options.ridge < 0.0) {
    throw PreconditionError("ridge must be nonnegative");
  }

  const Eigen::MatrixXd x = indicator_matrix(design);
  const Eigen::VectorXd w =
      Eigen::Map<const Eigen::VectorXd>(design.weights.data(), static_cast<Eigen::Index>(design.size()));
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(design.responses.data(),
                                                        static_cast<Eigen::Index>(design.size()));
  y.array() -= base;

  LeastSquaresFit fit;
  fit.coefficients.assign(d, 0.0);
  if (!options.efficiency_total) {
    const Eigen::VectorXd beta = solve_normal_equations(x, w, y, options.ridge, fit.ridge_applied);
    for (std::size_t j = 0; j < d; ++j) fit.coefficients[j] = beta(static_cast<Eigen::Index>(j));
    return fit;
  }

  // Eliminate the last coefficient: beta_last = total - sum of the others.
  const double total = *options.efficiency_total;
  if (d == 1) {
    fit.coefficients[0] = total;
    return fit;
  }
  const auto last = static_cast<Eigen::Index>(d - 1);
  Eigen::MatrixXd reduced = x.leftCols(last);
  reduced.colwise() -= x.col(last);
  const Eigen::VectorXd y_reduced = y - total * x.col(last);
  const Eigen::VectorXd beta =
      solve_normal_equations(reduced, w, y_reduced, options.ridge, fit.ridge_applied);
  double rest = 0.0;
  for (Eigen::Index j = 0; j < last; ++j) {
    fit.coefficients[static_cast<std::size_t>(j)] = beta(j);
    rest += beta(j);
  }
  fit.coefficients[d - 1] = total - rest;
  return fit;
}

RegressionResult kernelshap(SetFunction& v, std::size_t num_samples, std::uint64_t seed,
                            const KernelShapOptions& options) {
  const std::size_t d = v.num_features();
  if (num_samples < d) {
    throw PreconditionError("kernelshap needs num_samples >= d (" + std::to_string(num_samples) +
                            " < " + std::to_string(d) + ")");
  }
  if (d == 1 && !options.efficiency) {
    throw PreconditionError("kernelshap with d = 1 has no proper subsets; enable efficiency");
  }
  const std::size_t start_evals = v.distinct_evaluations();
  const auto start = Clock::now();

  std::vector<Stratum> strata;
  for (std::size_t n = 1; n < d; ++n) {
    strata.push_back({n, (static_cast<double>(d) - 1.0) /
                             (static_cast<double>(n) * static_cast<double>(d - n)),
                      d > 60 ? std::exp(log_binomial(d, n)) : binomial(d, n)});
  }

  // Enumerate stratum pairs (n, d-n) from the outside in while the budget
  // covers them at their share of the remaining mass.
  double remaining = static_cast<double>(num_samples);
  for (std::size_t lo = 0, hi = strata.empty() ? 0 : strata.size() - 1;
       !strata.empty() && lo <= hi; ++lo, --hi) {
    double open_mass = 0.0;
    for (const auto& s : strata) {
      if (!s.enumerated) open_mass += s.mass;
    }
    const double pair_mass = strata[lo].mass + (lo == hi ? 0.0 : strata[hi].mass);
    const double pair_count = strata[lo].count + (lo == hi ? 0.0 : strata[hi].count);
    if (pair_count > remaining * pair_mass / open_mass + 1e-9) break;
    strata[lo].enumerated = true;
    strata[hi].enumerated = true;
    remaining -= pair_count;
    if (hi == 0) break;
  }

  // Split what is left across the open strata by highest mass per row.
  auto left = static_cast<std::size_t>(std::max(remaining, 0.0));
  while (left > 0) {
    Stratum* best = nullptr;
    double best_score = -1.0;
    for (auto& s : strata) {
      if (s.enumerated || static_cast<double>(s.alloc) >= s.count) continue;
      const double score = s.mass / static_cast<double>(s.alloc + 1);
      if (score > best_score) {
        best_score = score;
        best = &s;
      }
    }
    if (best == nullptr) break;
    ++best->alloc;
    --left;
  }

  DesignMatrix design;
  design.dimension = d;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> scratch(d);
  for (const auto& s : strata) {
    if (s.enumerated) {
      const std::size_t before = design.rows.size();
      enumerate_size(d, s.size, design.rows);
      design.weights.resize(design.rows.size(), 0.0);
      std::fill(design.weights.begin() + static_cast<std::ptrdiff_t>(before),
                design.weights.end(), shapley_kernel_weight(d, s.size));
    } else if (s.alloc > 0) {
      std::unordered_set<FeatureSubset, FeatureSubsetHash> seen;
      while (seen.size() < s.alloc) {
        FeatureSubset subset = random_subset(d, s.size, rng, scratch);
        if (seen.insert(subset).second) {
          design.rows.push_back(std::move(subset));
          design.weights.push_back(s.mass / static_cast<double>(s.alloc));
        }
      }
    }
  }

  auto out = fit_design(v, std::move(design), Method::kKernelShap, options.efficiency,
                        options.ridge, start_evals, start);
  out.attribution.seed = seed;
  return out;
}

std::vector<FeatureSubset> connected_design_rows(const FeatureGraph& g, std::size_t k) {
  if (k == 0) throw PreconditionError("regression C-Shapley needs k >= 1");
  const std::size_t d = g.num_nodes();
  std::vector<FeatureSubset> rows;
  switch (g.kind()) {
    case GraphKind::kChain:
      for (std::size_t len = 1; len <= std::min(k, d); ++len) {
        for (std::size_t a = 0; a + len <= d; ++a) {
          FeatureSubset s(d);
          for (std::size_t j = a; j < a + len; ++j) s.insert(j);
          rows.push_back(std::move(s));
        }
      }
      break;
    case GraphKind::kGrid: {
      const std::size_t r = g.rows();
      const std::size_t c = g.cols();
      for (std::size_t n = 1; n <= std::min({k, r, c}); ++n) {
        for (std::size_t top = 0; top + n <= r; ++top) {
          for (std::size_t left = 0; left + n <= c; ++left) {
            FeatureSubset s(d);
            for (std::size_t a = top; a < top + n; ++a) {
              for (std::size_t b = left; b < left + n; ++b) s.insert(a * c + b);
            }
            rows.push_back(std::move(s));
          }
        }
      }
      break;
    }
    case GraphKind::kGeneral:
      throw UnsupportedTopologyError(
          "regression C-Shapley supports chain and grid graphs only");
  }
  return rows;
}

RegressionResult regression_c_shapley(SetFunction& v, const FeatureGraph& g, std::size_t k,
                                      const RegressionCShapleyOptions& options) {
  const std::size_t d = v.num_features();
  if (g.num_nodes() != d) {
    throw DimensionError("graph and set function disagree on the number of features");
  }
  const std::size_t start_evals = v.distinct_evaluations();
  const auto start = Clock::now();

  DesignMatrix design;
  design.dimension = d;
  for (auto& row : connected_design_rows(g, k)) {
    if (options.uniform_weights) {
      design.weights.push_back(1.0);
    } else {
      if (row.size() == d) continue;
      design.weights.push_back(shapley_kernel_weight(d, row.size()));
    }
    design.rows.push_back(std::move(row));
  }
  auto out = fit_design(v, std::move(design), Method::kCShapleyRegression, options.efficiency,
                        options.ridge, start_evals, start);
  out.attribution.order_k = k;
  return out;
}

}  // namespace lcshap
