#pragma once

#include <vector>

#include "dpdhsic/types.hpp"

namespace dpdhsic {

/// n x n kernel matrix of one group together with the kernel's sup bound K^j.
/// Exactly symmetric: each off-diagonal value is computed once and mirrored.
struct GramMatrix {
  Matrix values;
  double bound = 1.0;

  int n() const { return static_cast<int>(values.rows()); }
};

/// Kernel value between two points (rows as vectors).
/// Gaussian: exp(-|x-y|_2^2 / (2 nu^2)); Laplacian: exp(-|x-y|_1 / nu);
/// Linear: <x, y> (caller-declared bound).
double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& y);

/// Gram matrix of one block. Requires a positive bandwidth for
/// Gaussian/Laplacian (resolve_bandwidths first if unset). Entries must land
/// in [0, bound] up to 1e-12, otherwise InputError (for the linear kernel this
/// catches wrong domain bounds).
GramMatrix gram(const Matrix& block, const KernelSpec& spec);

/// Median-heuristic bandwidth: 2 nu^2 = median{ |x_i - x_l|_2^2 : i < l },
/// the median of an even-length list being the mean of the two central order
/// statistics. Throws DegenerateBandwidth when the median is 0 (all rows
/// identical) and InputError for fewer than two rows.
double median_heuristic(const Matrix& block);

/// K_0 = prod_j K^j over d >= 2 kernel specs.
double product_bound(const std::vector<KernelSpec>& specs);

/// Fill every bandwidth <= 0 entry with the per-group median heuristic.
/// Note: the heuristic reads the raw data and is NOT itself privatized; this
/// mirrors the procedure being modeled and is a documented privacy leak.
std::vector<KernelSpec> resolve_bandwidths(const Dataset& dataset,
                                           std::vector<KernelSpec> specs);

/// Gram matrices for all d groups (specs must have resolved bandwidths).
std::vector<GramMatrix> gram_all(const Dataset& dataset,
                                 const std::vector<KernelSpec>& specs);

}  // namespace dpdhsic
