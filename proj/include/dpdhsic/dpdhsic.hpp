#pragma once

#include <vector>

#include "dpdhsic/resampling.hpp"
#include "dpdhsic/types.hpp"

namespace dpdhsic {

/// Differentially private permutation dHSIC test:
/// statistic sqrt(max(V, 0)), sensitivity 2 d sqrt(K0) / n, permutation
/// resampling. Exact level floor((B+1) alpha)/(B+1) under the null and
/// (epsilon, delta)-DP for the released indicator. Bandwidths are resolved by
/// the median heuristic where unset. Gram matrices are computed once and every
/// permuted statistic is evaluated through index maps (no kernel
/// re-evaluation).
TestOutcome dpdhsic_test(const Dataset& dataset, std::vector<KernelSpec> specs,
                         const PrivacyParams& privacy, const TestConfig& config,
                         Rng& rng);

/// U-statistic variant: statistic U (signed), sensitivity (4 d^2 + 4 d) K0 / n.
/// Exact tuple enumeration limits it to desk scale: n must satisfy
/// n >= 2d and n^{2d} <= 1e8 (use u_stat_max_n(d)); otherwise TooLarge.
TestOutcome dpdhsic_u_test(const Dataset& dataset, std::vector<KernelSpec> specs,
                           const PrivacyParams& privacy, const TestConfig& config,
                           Rng& rng);

/// Bootstrap variant: statistic sqrt(max(V, 0)) with bootstrap resampling and
/// the range sensitivity sqrt(2 K0) (no 1/n bound exists for bootstrap).
/// Level is asymptotic only, and the large noise scale makes the test
/// provably inconsistent at fixed xi - provided for comparison experiments.
TestOutcome dp_bootstrap_dhsic_test(const Dataset& dataset, std::vector<KernelSpec> specs,
                                    const PrivacyParams& privacy, const TestConfig& config,
                                    Rng& rng);

}  // namespace dpdhsic
