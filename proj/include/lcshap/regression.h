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

// Kernel-weighted least squares: KernelSHAP and the regression form of
// C-Shapley over connected intervals or square patches.

#ifndef LCSHAP_REGRESSION_H_
#define LCSHAP_REGRESSION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "lcshap/attribution.h"
#include "lcshap/graph.h"
#include "lcshap/valuation.h"

namespace lcshap {

struct DesignMatrix {
  std::size_t dimension = 0;
  std::vector<FeatureSubset> rows;
  std::vector<double> responses;
  std::vector<double> weights;

  std::size_t size() const { return rows.size(); }
  // Equal lengths, matching dimensions, positive weights.
  void validate() const;
};

// Header f0..f{d-1},response,weight, then one 0/1 indicator row per subset.
void write_design_csv(const DesignMatrix& design, std::ostream& out);

// (d-1) / (C(d,n) n (d-n)); log-gamma binomials for d > 30.
double shapley_kernel_weight(std::size_t d, std::size_t subset_size);

struct LeastSquaresOptions {
  // Added to the diagonal only when the normal matrix is singular. Unset means
  // 1e-10 * trace / d; zero turns singularity into SingularSystemError.
  std::optional<double> ridge;
  // When set, the fit is constrained to sum(beta) == *efficiency_total.
  std::optional<double> efficiency_total;
};

struct LeastSquaresFit {
  std::vector<double> coefficients;
  double ridge_applied = 0.0;
};

// Minimizes sum_r w_r (F_r - base - x_r . beta)^2.
LeastSquaresFit weighted_least_squares(const DesignMatrix& design, double base,
                                       const LeastSquaresOptions& options = {});

struct RegressionResult {
  AttributionResult attribution;
  DesignMatrix design;
  LeastSquaresFit fit;
};

struct KernelShapOptions {
  bool efficiency = true;
  std::optional<double> ridge;
};

// Size-stratified design: strata are enumerated outright while the budget
// covers them in proportion to their kernel mass (smallest and largest sizes
// first), the remaining rows are split across the other strata by kernel mass
// and drawn uniformly without replacement. Each row of a sampled stratum
// carries mass / rows_drawn. With num_samples >= 2^d - 2 every proper subset
// appears with its exact kernel weight.
RegressionResult kernelshap(SetFunction& v, std::size_t num_samples, std::uint64_t seed,
                            const KernelShapOptions& options = {});

struct RegressionCShapleyOptions {
  bool uniform_weights = false;
  bool efficiency = false;
  std::optional<double> ridge;
};

// Connected rows of the design: intervals of length <= k on a chain, n x n
// patches with n <= k on a grid. A row equal to the full set is dropped under
// kernel weights.
std::vector<FeatureSubset> connected_design_rows(const FeatureGraph& g, std::size_t k);

// Evaluations are the design rows plus v(empty), and v(full) when the
// efficiency constraint is on.
RegressionResult regression_c_shapley(SetFunction& v, const FeatureGraph& g, std::size_t k,
                                      const RegressionCShapleyOptions& options = {});

}  // namespace lcshap

#endif  // LCSHAP_REGRESSION_H_
