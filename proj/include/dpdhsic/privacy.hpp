#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dpdhsic/rng.hpp"
#include "dpdhsic/types.hpp"

namespace dpdhsic {

enum class StatisticKind { VSqrt, U, BootstrapVSqrt };

/// Worst-case change of a statistic over neighboring datasets, uniform over
/// all resamples; `provenance` names the formula that produced it.
struct SensitivityBound {
  double delta_t = 0.0;
  StatisticKind kind = StatisticKind::VSqrt;
  std::string provenance;
};

/// Permutation sensitivity of sqrt(V-statistic) dHSIC: 2 d sqrt(K0) / n.
SensitivityBound v_sensitivity(int d, double k0, int n);

/// Permutation sensitivity of the U-statistic: (4 d^2 + 4 d) K0 / n, the upper
/// endpoint of the known range for the true constant c_n in [2, 4d^2+4d];
/// calibrating at the endpoint trades power for guaranteed privacy.
/// Requires n >= 2d.
SensitivityBound u_sensitivity(int d, double k0, int n);

/// Bootstrap sensitivity: the statistic's full range sqrt(2 K0). No bound of
/// order 1/n exists for bootstrap resampling (adversarial resamples reach
/// 3 sqrt(K0) / 8), so the trivial range bound is the honest choice.
SensitivityBound bootstrap_sensitivity(double k0);

/// Laplace(0, scale) via inverse CDF; scale 0 returns 0 exactly (the uniform
/// is still consumed, keeping streams aligned across privacy settings).
double laplace(Rng& rng, double scale);

/// The Laplace scale actually added to every statistic: 2 delta_t / xi.
/// The factor 2 covers releasing both the statistic and the test's quantile
/// threshold. Infinite xi gives scale 0 (non-private limit).
double noise_scale(const SensitivityBound& bound, const PrivacyParams& privacy);

/// Sequential composition: sum the budgets. Empty list is InputError (an
/// epsilon of 0 is not a valid budget); sum(delta) >= 1 is DeltaOverflow.
PrivacyParams compose(const std::vector<std::pair<double, double>>& budgets);

/// Result of an empirical privacy-loss audit. `estimate` and `upper` are the
/// point estimate and Wilson-corrected 95% upper confidence bound of
/// max over S in {{reject},{accept}} of log((P(S|x) - delta) / P(S|x')).
/// A zero-frequency denominator makes the bound infinite (`unbounded`).
struct AuditReport {
  double estimate = 0.0;
  double upper = 0.0;
  bool unbounded = false;
  long draws = 0;
};

/// Monte Carlo check of the DP inequality on one neighbor pair (hamming
/// distance over joint rows must be exactly 1). `mechanism` is the full
/// randomized test (dataset, fresh stream) -> reject. Requires draws >= 1e4.
AuditReport audit_epsilon(const std::function<bool(const Dataset&, Rng&)>& mechanism,
                          const Dataset& x, const Dataset& x_prime, long draws,
                          double delta, Rng& rng);

/// Row index where two equal-shape datasets differ, requiring exactly one
/// differing joint row (InputError otherwise). Shared by audit_epsilon and
/// the sensitivity stress tools.
int neighbor_row(const Dataset& x, const Dataset& x_prime);

/// 95% Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_interval(long successes, long trials);

}  // namespace dpdhsic
