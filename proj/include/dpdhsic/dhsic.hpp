#pragma once

#include <vector>

#include "dpdhsic/kernels.hpp"
#include "dpdhsic/types.hpp"

namespace dpdhsic {

/// A dHSIC estimate: `squared` is the raw (possibly slightly negative from
/// cancellation) squared form, `value` is sqrt(max(squared, 0)).
struct StatisticValue {
  double value = 0.0;
  double squared = 0.0;

  static StatisticValue from_squared(double sq);
};

/// Squared V-statistic of dHSIC in factorized O(d n^2) form:
///   term1 = (1/n^2)   sum_{i,l} prod_j G_j[i][l]
///   term2 = prod_j mean(G_j)
///   term3 = (2/n) sum_i prod_j rowmean_i(G_j)
/// returning term1 + term2 - term3. The two big accumulations use compensated
/// (Kahan) summation.
double v_stat_squared(const std::vector<GramMatrix>& grams);

/// Same statistic evaluated on the resampled data, reading the original Gram
/// matrices through the resampler's index maps instead of recomputing kernels.
/// Bitwise-identical to v_stat_squared(gram_all(apply(dataset, resampler)))
/// because both run the same accumulation loop in the same order and the
/// kernels are evaluated symmetrically.
double v_stat_squared_resampled(const std::vector<GramMatrix>& grams,
                                const Resampler& resampler);

/// Brute-force oracle: literal enumeration of the three index sums over all
/// tuples j_2, j_{2d}, j_{d+1} in [n]^k. Guard: n^{2d} <= 1e8, else TooLarge.
double v_stat_naive(const std::vector<GramMatrix>& grams);

/// sqrt of the squared V-statistic on a dataset; bandwidths are resolved by
/// the median heuristic where unset.
StatisticValue empirical_dhsic(const Dataset& dataset, std::vector<KernelSpec> specs);

/// Unbiased U-statistic: the same three sums restricted to distinct-index
/// tuples with coefficients (n-2)!/n!, (n-2d)!/n!, 2(n-d-1)!/n!. Exact
/// enumeration; requires n >= 2d (InputError) and n^{2d} <= 1e8 (TooLarge).
double u_stat(const std::vector<GramMatrix>& grams);

/// U-statistic of the resampled data through index maps (same guards).
double u_stat_resampled(const std::vector<GramMatrix>& grams, const Resampler& resampler);

/// Largest n for which u_stat stays inside its enumeration guard at this d.
int u_stat_max_n(int d);

/// Exact population dHSIC of a finite discrete joint distribution by atom
/// enumeration:
///   E prod_j k^j(X_1, X_2) + prod_j E k^j(Y, Y') - 2 E_s prod_j E_a k^j(s_j, a)
/// pmf is flattened row-major over the atom grid (group 0 slowest, group d-1
/// fastest); atoms[j] holds group j's atom coordinates as rows. pmf must be
/// nonnegative and sum to 1 +- 1e-12 (InputError otherwise).
StatisticValue population_dhsic_discrete(const std::vector<double>& pmf,
                                         const std::vector<Matrix>& atoms,
                                         const std::vector<KernelSpec>& specs);

}  // namespace dpdhsic
