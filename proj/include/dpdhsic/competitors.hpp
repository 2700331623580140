#pragma once

#include <vector>

#include "dpdhsic/resampling.hpp"
#include "dpdhsic/types.hpp"

namespace dpdhsic {

/// Multiple-testing baseline: for each step j = 1..d-1 (0-based over `order`),
/// run a DP permutation HSIC of group order[j] against the concatenation of
/// groups order[0..j-1] (product kernel = Hadamard product of Grams), with
/// sensitivity 4 sqrt(prod_{l<=j} K^l)/n, budget (eps/(d-1), delta/(d-1)) and
/// level alpha/(d-1); reject iff any sub-test rejects. Empty `order` means a
/// seeded random shuffle (the test's power depends on the order and no
/// canonical order exists for generic data). Reported p-value/m0 are the
/// minimum sub-test p-value and its m0.
TestOutcome mdphsic_test(const Dataset& dataset, std::vector<KernelSpec> specs,
                         const PrivacyParams& privacy, const TestConfig& config,
                         Rng& rng, std::vector<int> order = {});

/// Test-of-tests baseline: shuffle rows, split into m = floor(sqrt(n)) subsets
/// (n >= 16 so each subset holds >= 4 rows), run the plain (non-private)
/// permutation dHSIC p-value on each, count S = #{p <= alpha0} with
/// alpha0 = 5 alpha, release S~ = S + Laplace(1/xi) and reject iff S~ > c*,
/// where c* is the smallest threshold with
/// P(Binomial(m, alpha0) + Laplace(1/xi) > c*) <= alpha (exact convolution).
/// Count sensitivity is 1 (one row lands in one subset). The true null
/// p-values are stochastically >= U{1..B+1}/(B+1), so the level is conservative.
TestOutcome tot_dhsic_test(const Dataset& dataset, std::vector<KernelSpec> specs,
                           const PrivacyParams& privacy, const TestConfig& config,
                           Rng& rng);

/// Subsample-and-aggregate randomized-response baseline: same subset scheme;
/// each subset's indicator b_i = 1(p_i <= alpha0) is kept with probability
/// p = e^eps/(1+e^eps) and flipped otherwise (each bit individually eps-DP,
/// disjoint data => parallel composition), and the test rejects iff the sum of
/// privatized bits exceeds the binomial critical value at level alpha for
/// success probability q0 = alpha0 p + (1-alpha0)(1-p). Below the minimum
/// sample size the test deterministically accepts: it needs every subset to
/// hold >= 4 rows, m >= ceil(3/(2p-1)^2) subsets for the response signal to
/// clear the flip noise, and a nonempty rejection region.
TestOutcome sar_dhsic_test(const Dataset& dataset, std::vector<KernelSpec> specs,
                           const PrivacyParams& privacy, const TestConfig& config,
                           Rng& rng);

/// Randomized-response keep probability e^eps / (1 + e^eps).
double rr_keep_probability(double epsilon);

/// Minimum subset count for SAR to run at this budget (see sar_dhsic_test).
int sar_min_subsets(double epsilon);

/// Non-private permutation dHSIC p-value (the plain resampling p-value used
/// inside the subsample-and-aggregate baselines).
double permutation_dhsic_p_value(const Dataset& dataset, std::vector<KernelSpec> specs,
                                 int B, Rng& rng);

}  // namespace dpdhsic
