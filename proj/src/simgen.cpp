#include "dpdhsic/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <Eigen/Cholesky>

namespace dpdhsic {

Dataset gen_null_gaussian(int n, int d, Rng& rng) {
  if (n < 1) throw InputError("need n >= 1");
  if (d < 2) throw InputError("need d >= 2");
  std::vector<Matrix> groups;
  groups.reserve(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    Matrix g(n, 1);
    for (int i = 0; i < n; ++i) g(i, 0) = rng.normal();
    groups.push_back(std::move(g));
  }
  return Dataset(std::move(groups));
}

Dataset gen_product_dependence(int n, double sigma, Rng& rng) {
  if (n < 1) throw InputError("need n >= 1");
  if (!(sigma >= 0)) throw InputError("sigma must be >= 0");
  Matrix x1(n, 1), x2(n, 1), x3(n, 1);
  for (int i = 0; i < n; ++i) x1(i, 0) = rng.normal();
  for (int i = 0; i < n; ++i) x2(i, 0) = rng.normal();
  for (int i = 0; i < n; ++i) x3(i, 0) = x1(i, 0) * x2(i, 0) + sigma * rng.normal();
  std::vector<Matrix> groups;
  groups.push_back(std::move(x1));
  groups.push_back(std::move(x2));
  groups.push_back(std::move(x3));
  return Dataset(std::move(groups));
}

Dataset gen_toeplitz(int n, int d, double rho, Rng& rng) {
  if (n < 1) throw InputError("need n >= 1");
  if (d < 2) throw InputError("need d >= 2");
  if (!(std::abs(rho) < 1)) throw InputError("toeplitz needs |rho| < 1");
  Matrix sigma(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) sigma(a, b) = std::pow(rho, std::abs(a - b));
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw InputError("toeplitz covariance is not positive definite");
  const Matrix chol = llt.matrixL();
  std::vector<Matrix> groups(static_cast<std::size_t>(d), Matrix(n, 1));
  Vector z(d);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a) z(a) = rng.normal();
    const Vector x = chol * z;
    for (int j = 0; j < d; ++j) groups[static_cast<std::size_t>(j)](i, 0) = x(j);
  }
  return Dataset(std::move(groups));
}

Dataset group_random(const Dataset& scalars, int k, Rng& rng) {
  const int d = scalars.d();
  if (k < 2 || k > d) throw InputError("group count must satisfy 2 <= k <= d");
  for (int j = 0; j < d; ++j)
    if (scalars.group(j).cols() != 1)
      throw InputError("group_random expects scalar (single-column) groups");
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  for (int i = d - 1; i >= 1; --i) {
    const auto j = rng.below(static_cast<std::uint32_t>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  const int n = scalars.n();
  std::vector<Matrix> groups;
  groups.reserve(static_cast<std::size_t>(k));
  int start = 0;
  for (int s = 0; s < k; ++s) {
    const int size = d / k + (s < d % k ? 1 : 0);
    Matrix g(n, size);
    for (int c = 0; c < size; ++c)
      g.col(c) = scalars.group(order[static_cast<std::size_t>(start + c)]).col(0);
    groups.push_back(std::move(g));
    start += size;
  }
  return Dataset(std::move(groups));
}

double EdgeFunc::operator()(double x) const {
  switch (kind) {
    case EdgeKind::Linear:
      return coef * x;
    case EdgeKind::Quadratic:
      return coef * x * x;
    case EdgeKind::Tanh:
      return coef * std::tanh(x);
  }
  throw InputError("unknown edge kind");
}

Dataset gen_sem_dag(int n, const Dag& dag, const EdgeFuncMap& funcs,
                    const std::vector<double>& noise_sd, Rng& rng) {
  if (n < 1) throw InputError("need n >= 1");
  if (dag.d < 2) throw InputError("need d >= 2");
  if (static_cast<int>(noise_sd.size()) != dag.d)
    throw InputError("one noise standard deviation per node required");
  for (const double sd : noise_sd)
    if (!(sd > 0)) throw InputError("noise standard deviations must be positive");

  const auto topo = topological_order(dag);
  std::vector<Matrix> groups(static_cast<std::size_t>(dag.d), Matrix(n, 1));
  for (const int j : topo) {
    Matrix& col = groups[static_cast<std::size_t>(j)];
    const double sd = noise_sd[static_cast<std::size_t>(j)];
    for (int i = 0; i < n; ++i) col(i, 0) = sd * rng.normal();
    for (const int k : dag.parents[static_cast<std::size_t>(j)]) {
      const auto it = funcs.find({j, k});
      if (it == funcs.end())
        throw InputError("missing edge function for edge " + std::to_string(k) +
                         " -> " + std::to_string(j));
      const Matrix& parent = groups[static_cast<std::size_t>(k)];
      for (int i = 0; i < n; ++i) col(i, 0) += it->second(parent(i, 0));
    }
  }
  return Dataset(std::move(groups));
}

TwoAtomFamily two_atom_family(int d, double v, double atom_gap) {
  if (d < 2 || d > 16) throw InputError("two-atom family needs 2 <= d <= 16");
  if (!(atom_gap > 0)) throw InputError("atom gap must be positive");
  const double states = std::ldexp(1.0, d);       // 2^d
  const double half = std::ldexp(1.0, d - 1) - 1;  // 2^{d-1} - 1
  const double vmax = half / states;
  if (!(v >= 0) || v > vmax + 1e-15)
    throw InputError("v must lie in [0, (2^{d-1}-1)/2^d]");

  TwoAtomFamily fam;
  fam.d = d;
  fam.v = v;
  fam.gap = atom_gap;
  const int s_count = 1 << d;
  fam.pmf.assign(static_cast<std::size_t>(s_count), 1.0 / states - v / half);
  fam.pmf[0] = 1.0 / states + v;
  fam.pmf[static_cast<std::size_t>(s_count - 1)] = 1.0 / states + v;
  fam.atoms.reserve(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    Matrix a(2, 1);
    a(0, 0) = 0.0;
    a(1, 0) = atom_gap;
    fam.atoms.push_back(std::move(a));
  }
  return fam;
}

std::pair<Dataset, Dataset> worst_case_neighbor_pair(int n, double atom_gap) {
  if (n < 3) throw InputError("need n >= 3");
  if (!(atom_gap > 0)) throw InputError("atom gap must be positive");
  const auto build = [&](int leading_zero_rows) {
    Matrix col(n, 1);
    for (int i = 0; i < n; ++i) col(i, 0) = i < leading_zero_rows ? 0.0 : atom_gap;
    std::vector<Matrix> groups{col, col};
    return Dataset(std::move(groups));
  };
  return {build(2), build(1)};
}

Dataset TwoAtomFamily::sample(int n, Rng& rng) const {
  if (n < 1) throw InputError("need n >= 1");
  std::vector<double> cum(pmf.size());
  double acc = 0.0;
  for (std::size_t s = 0; s < pmf.size(); ++s) {
    acc += pmf[s];
    cum[s] = acc;
  }
  cum.back() = 1.0;
  std::vector<Matrix> groups(static_cast<std::size_t>(d), Matrix(n, 1));
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const int s = static_cast<int>(it - cum.begin());
    // Bit j of the state indexes group j's atom, group 0 as the high bit.
    for (int j = 0; j < d; ++j) {
      const int digit = (s >> (d - 1 - j)) & 1;
      groups[static_cast<std::size_t>(j)](i, 0) = atoms[static_cast<std::size_t>(j)](digit, 0);
    }
  }
  return Dataset(std::move(groups));
}

}  // namespace dpdhsic
