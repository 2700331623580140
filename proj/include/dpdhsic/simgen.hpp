#pragma once

#include <map>
#include <vector>

#include "dpdhsic/dag.hpp"
#include "dpdhsic/rng.hpp"
#include "dpdhsic/types.hpp"

namespace dpdhsic {

/// d independent standard normal variables, one group each (joint null).
Dataset gen_null_gaussian(int n, int d, Rng& rng);

/// Three groups with X3 = X1 * X2 + e: X1, X2 i.i.d. N(0,1), e ~ N(0, sigma^2)
/// independent. Pairwise independent but jointly dependent.
Dataset gen_product_dependence(int n, double sigma, Rng& rng);

/// Multivariate normal with Toeplitz covariance Sigma_{ij} = rho^|i-j| via
/// Cholesky; each of the d variables is its own group. Requires |rho| < 1.
Dataset gen_toeplitz(int n, int d, double rho, Rng& rng);

/// Randomly partition a dataset of d scalar groups into k nonempty groups
/// (seeded shuffle, near-equal sizes: the first d mod k groups get one extra
/// column). Requires 2 <= k <= d.
Dataset group_random(const Dataset& scalars, int k, Rng& rng);

/// Edge function for structural equations: linear coef*x, quadratic coef*x^2,
/// or coef*tanh(x).
enum class EdgeKind { Linear, Quadratic, Tanh };
struct EdgeFunc {
  EdgeKind kind = EdgeKind::Linear;
  double coef = 1.0;

  double operator()(double x) const;
};

/// (child, parent) -> edge function.
using EdgeFuncMap = std::map<std::pair<int, int>, EdgeFunc>;

/// Additive structural equation model on a DAG:
///   X^j = sum_{k in PA_j} f^{j,k}(X^k) + N^j,  N^j ~ N(0, noise_sd[j]^2),
/// evaluated in topological order. Every edge needs an entry in funcs.
Dataset gen_sem_dag(int n, const Dag& dag, const EdgeFuncMap& funcs,
                    const std::vector<double>& noise_sd, Rng& rng);

/// The two-atom discrete family: every group has atoms {0, atom_gap}; the two
/// "diagonal" joint atoms (all groups at atom 0, all at atom 1) carry mass
/// 1/2^d + v each and the remaining 2^d - 2 atoms carry
/// 1/2^d - v/(2^{d-1} - 1). v = 0 is the independent uniform product; the
/// admissible range is 0 <= v <= (2^{d-1} - 1)/2^d. At v > 0 the squared
/// population dHSIC equals (2^d/(2^{d-1}-1)^2) v^2 (2^{d-1} S1 - S2) with
/// S1 = prod_j kappa^j(0) + prod_j kappa^j(gap),
/// S2 = prod_j {kappa^j(0) + kappa^j(gap)}.
struct TwoAtomFamily {
  int d = 2;
  double v = 0.0;
  double gap = 2.0;
  std::vector<double> pmf;     // size 2^d, row-major (group 0 slowest)
  std::vector<Matrix> atoms;   // per group: 2 x 1 matrix {0, gap}

  /// i.i.d. sample of n joint observations (inverse-CDF over the pmf).
  Dataset sample(int n, Rng& rng) const;
};

TwoAtomFamily two_atom_family(int d, double v, double atom_gap);

/// Worst-case neighbor pair for privacy stress tests (d=2, scalar groups,
/// rows (a, a) or (b, b) with a = 0 and b = atom_gap): `first` opens with two
/// (a, a) rows, `second` with one; all later rows are (b, b). They differ in
/// row 1 only. Swapping the first two rows of one group drives the statistic
/// gap between the two datasets toward the permutation sensitivity bound.
/// Requires n >= 3.
std::pair<Dataset, Dataset> worst_case_neighbor_pair(int n, double atom_gap);

}  // namespace dpdhsic
