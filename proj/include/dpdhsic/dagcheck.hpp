#pragma once

#include <vector>

#include "dpdhsic/dag.hpp"
#include "dpdhsic/dpdhsic.hpp"
#include "dpdhsic/types.hpp"

namespace dpdhsic {

/// Residuals of per-node regressions under the DAG's structural model.
/// Parentless nodes are mean-centered; every other node is regressed on the
/// cubic polynomial basis {x, x^2, x^3} of each parent (interaction-free) with
/// an intercept, ridge penalty lambda = 1e-3 * n on the non-intercept
/// coefficients. Requires every group to be a single column.
Dataset fit_residuals(const Dataset& dataset, const Dag& dag);

/// DAG diagnostic: fit residuals, then test their joint independence with the
/// DP permutation dHSIC. Rejecting residual independence rejects the DAG.
/// A single mechanism invocation, so the budget is spent once (no
/// composition). Kernels: Gaussian, median heuristic on the residuals.
TestOutcome check_dag(const Dataset& dataset, const Dag& dag,
                      std::vector<KernelSpec> specs, const PrivacyParams& privacy,
                      const TestConfig& config, Rng& rng);

}  // namespace dpdhsic
