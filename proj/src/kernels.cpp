#include "dpdhsic/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace dpdhsic {

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& y) {
  switch (spec.kind) {
    case KernelKind::Gaussian: {
      if (!(spec.bandwidth > 0)) throw InputError("Gaussian kernel needs a positive bandwidth");
      const double sq = (x - y).squaredNorm();
      return std::exp(-sq / (2.0 * spec.bandwidth * spec.bandwidth));
    }
    case KernelKind::Laplacian: {
      if (!(spec.bandwidth > 0)) throw InputError("Laplacian kernel needs a positive bandwidth");
      const double l1 = (x - y).lpNorm<1>();
      return std::exp(-l1 / spec.bandwidth);
    }
    case KernelKind::Linear:
      return x.dot(y);
  }
  throw InputError("unknown kernel kind");
}

GramMatrix gram(const Matrix& block, const KernelSpec& spec) {
  const int n = static_cast<int>(block.rows());
  if (n < 1) throw InputError("gram needs at least one row");
  GramMatrix g;
  g.bound = spec.bound;
  g.values.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int l = i; l < n; ++l) {
      const double v = kernel_eval(spec, block.row(i), block.row(l));
      if (!(v >= -1e-12) || !(v <= spec.bound + 1e-12))
        throw InputError("kernel value " + std::to_string(v) +
                         " outside [0, bound]; check the declared kernel bound");
      g.values(i, l) = v;
      g.values(l, i) = v;
    }
  }
  return g;
}

double median_heuristic(const Matrix& block) {
  const int n = static_cast<int>(block.rows());
  if (n < 2) throw InputError("median heuristic needs at least 2 rows");
  std::vector<double> dists;
  dists.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int l = i + 1; l < n; ++l)
      dists.push_back((block.row(i) - block.row(l)).squaredNorm());
  std::sort(dists.begin(), dists.end());
  const size_t m = dists.size();
  double med;
  if (m % 2 == 1) {
    med = dists[m / 2];
  } else {
    med = 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  }
  if (!(med > 0))
    throw DegenerateBandwidth("median pairwise distance is 0 (all rows identical)");
  // 2 nu^2 = median  =>  nu = sqrt(median / 2).
  return std::sqrt(med / 2.0);
}

double product_bound(const std::vector<KernelSpec>& specs) {
  if (specs.size() < 2) throw InputError("need at least 2 kernel specs");
  double k0 = 1.0;
  for (const auto& s : specs) {
    if (!(s.bound > 0)) throw InputError("kernel bound must be positive");
    k0 *= s.bound;
  }
  return k0;
}

std::vector<KernelSpec> resolve_bandwidths(const Dataset& dataset,
                                           std::vector<KernelSpec> specs) {
  if (static_cast<int>(specs.size()) != dataset.d())
    throw InputError("one kernel spec per group required");
  for (int j = 0; j < dataset.d(); ++j) {
    KernelSpec& s = specs[static_cast<size_t>(j)];
    if (s.kind != KernelKind::Linear && !(s.bandwidth > 0))
      s.bandwidth = median_heuristic(dataset.group(j));
  }
  return specs;
}

std::vector<GramMatrix> gram_all(const Dataset& dataset,
                                 const std::vector<KernelSpec>& specs) {
  if (static_cast<int>(specs.size()) != dataset.d())
    throw InputError("one kernel spec per group required");
  std::vector<GramMatrix> grams;
  grams.reserve(specs.size());
  for (int j = 0; j < dataset.d(); ++j)
    grams.push_back(gram(dataset.group(j), specs[static_cast<size_t>(j)]));
  return grams;
}

}  // namespace dpdhsic
