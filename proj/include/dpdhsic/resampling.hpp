#pragma once

#include <functional>
#include <vector>

#include "dpdhsic/privacy.hpp"
#include "dpdhsic/rng.hpp"
#include "dpdhsic/types.hpp"

namespace dpdhsic {

/// Resampler whose d maps are all the identity.
Resampler identity_resampler(int n, int d);

/// Permutation resampler: map 0 is the identity (only relative permutations
/// between groups matter, and this preserves the group structure the exact
/// level argument needs); maps 1..d-1 are independent uniform permutations
/// (Fisher-Yates).
Resampler draw_permutation(int n, int d, Rng& rng);

/// Bootstrap resampler: every map is n i.i.d. uniform draws from [0, n),
/// maps mutually independent.
Resampler draw_bootstrap(int n, int d, Rng& rng);

/// Materialize the resampled dataset: group j row i = original row maps[j][i].
Dataset apply(const Dataset& dataset, const Resampler& resampler);

/// The shared DP resampling loop. For i = 0..B draws resampler phi_i (phi_0 is
/// the identity) and noise zeta_i on the per-index stream rng.fork(i), sets
///   M_i = statistic(phi_i) + (2 Delta_T / xi) zeta_i,
/// and rejects iff p_dp = (#{i >= 1 : M_i >= M_0} + 1)/(B+1) <= alpha.
/// `statistic_of` receives the resampler, letting callers evaluate through
/// pre-computed Gram matrices; use dp_resampling_test for the dataset-callback
/// form. Per-index streams make the result independent of evaluation order.
TestOutcome dp_resampling_core(int n, int d,
                               const std::function<double(const Resampler&)>& statistic_of,
                               const SensitivityBound& bound, ResamplerKind kind,
                               const PrivacyParams& privacy, const TestConfig& config,
                               Rng& rng);

/// Generic DP resampling test over a dataset-level statistic callback.
TestOutcome dp_resampling_test(const Dataset& dataset,
                               const std::function<double(const Dataset&)>& statistic,
                               const SensitivityBound& bound, ResamplerKind kind,
                               const PrivacyParams& privacy, const TestConfig& config,
                               Rng& rng);

/// Quantile form of the rejection rule: reject iff m0 > q_{1-alpha}, the order
/// statistic of {m0} u ms at rank ceil((1-alpha)(B+1)). Equals the p-value
/// rule (p_dp <= alpha) exactly, for every input including ties, because both
/// sides derive their cutoff from the same t = floor(alpha (B+1)).
bool quantile_indicator(double m0, const std::vector<double>& ms, double alpha);

/// Shared integer cutoff t = floor(alpha * (B+1)): the p-value rule rejects
/// iff #{M_i >= M_0} + 1 <= t; the quantile rank is B + 1 - t.
int rejection_cutoff(double alpha, int B);

/// The adjusted level max{((B+1) alpha - 1)/B, 0}: the exact rejection
/// probability of the resampling test under exchangeability is sandwiched via
/// this quantity; 0 iff alpha < 1/(B+1) (no power at all).
double alpha_star(double alpha, int B);

}  // namespace dpdhsic
