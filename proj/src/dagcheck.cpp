#include "dpdhsic/dagcheck.hpp"

#include <utility>

#include <Eigen/Cholesky>

namespace dpdhsic {

Dataset fit_residuals(const Dataset& dataset, const Dag& dag) {
  const int d = dataset.d();
  const int n = dataset.n();
  if (dag.d != d) throw InputError("DAG node count must equal the group count");
  for (int j = 0; j < d; ++j)
    if (dataset.group(j).cols() != 1)
      throw InputError("residual fitting expects scalar (single-column) groups");
  topological_order(dag);  // validates the graph

  const double lambda = 1e-3 * n;
  std::vector<Matrix> residuals(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const Vector y = dataset.group(j).col(0);
    const auto& parents = dag.parents[static_cast<std::size_t>(j)];
    if (parents.empty()) {
      residuals[static_cast<std::size_t>(j)] = y.array() - y.mean();
      continue;
    }
    const int p = 1 + 3 * static_cast<int>(parents.size());
    Matrix phi(n, p);
    phi.col(0).setOnes();
    int c = 1;
    for (const int k : parents) {
      const auto x = dataset.group(k).col(0).array();
      phi.col(c++) = x;
      phi.col(c++) = x * x;
      phi.col(c++) = x * x * x;
    }
    Matrix gram = phi.transpose() * phi;
    for (int a = 1; a < p; ++a) gram(a, a) += lambda;  // intercept unpenalized
    const Vector beta = gram.ldlt().solve(phi.transpose() * y);
    residuals[static_cast<std::size_t>(j)] = y - phi * beta;
  }
  return Dataset(std::move(residuals));
}

TestOutcome check_dag(const Dataset& dataset, const Dag& dag,
                      std::vector<KernelSpec> specs, const PrivacyParams& privacy,
                      const TestConfig& config, Rng& rng) {
  const Dataset residuals = fit_residuals(dataset, dag);
  return dpdhsic_test(residuals, std::move(specs), privacy, config, rng);
}

}  // namespace dpdhsic
