#include "dpdhsic/privacy.hpp"

#include <cmath>
#include <limits>

namespace dpdhsic {

namespace {

constexpr double kZ95 = 1.959963984540054;  // Phi^{-1}(0.975)

void check_common(int d, double k0, int n) {
  if (d < 2) throw InputError("need d >= 2");
  if (!(k0 > 0) || !std::isfinite(k0)) throw InputError("K0 must be positive and finite");
  if (n < 1) throw InputError("need n >= 1");
}

}  // namespace

SensitivityBound v_sensitivity(int d, double k0, int n) {
  check_common(d, k0, n);
  SensitivityBound b;
  b.delta_t = 2.0 * d * std::sqrt(k0) / n;
  b.kind = StatisticKind::VSqrt;
  b.provenance = "permutation V-statistic root: 2 d sqrt(K0) / n";
  return b;
}

SensitivityBound u_sensitivity(int d, double k0, int n) {
  check_common(d, k0, n);
  if (n < 2 * d) throw InputError("U-statistic sensitivity needs n >= 2d");
  SensitivityBound b;
  b.delta_t = (4.0 * d * d + 4.0 * d) * k0 / n;
  b.kind = StatisticKind::U;
  b.provenance = "permutation U-statistic, upper endpoint: (4d^2+4d) K0 / n";
  return b;
}

SensitivityBound bootstrap_sensitivity(double k0) {
  if (!(k0 > 0) || !std::isfinite(k0)) throw InputError("K0 must be positive and finite");
  SensitivityBound b;
  b.delta_t = std::sqrt(2.0 * k0);
  b.kind = StatisticKind::BootstrapVSqrt;
  b.provenance = "bootstrap root statistic range: sqrt(2 K0)";
  return b;
}

double laplace(Rng& rng, double scale) {
  if (!(scale >= 0)) throw InputError("Laplace scale must be >= 0");
  const double u = rng.uniform_open();  // in (0, 1), never exactly 0.5
  if (scale == 0.0) return 0.0;
  if (u < 0.5) return scale * std::log(2.0 * u);
  return -scale * std::log(2.0 * (1.0 - u));
}

double noise_scale(const SensitivityBound& bound, const PrivacyParams& privacy) {
  if (!(bound.delta_t > 0)) throw InputError("sensitivity must be positive");
  return 2.0 * bound.delta_t / privacy.xi();  // 0 when xi = inf
}

PrivacyParams compose(const std::vector<std::pair<double, double>>& budgets) {
  if (budgets.empty()) throw InputError("cannot compose an empty budget list");
  double eps = 0.0, del = 0.0;
  for (const auto& [e, dl] : budgets) {
    if (std::isnan(e) || e < 0) throw InputError("epsilon must be >= 0");
    if (!(dl >= 0.0) || dl >= 1.0) throw InputError("delta must be in [0, 1)");
    eps += e;
    del += dl;
  }
  if (del >= 1.0) throw DeltaOverflow("composed delta reached 1");
  return PrivacyParams(eps, del);
}

std::pair<double, double> wilson_interval(long successes, long trials) {
  if (trials < 1) throw InputError("need at least one trial");
  if (successes < 0 || successes > trials)
    throw InputError("successes must lie in [0, trials]");
  const double nt = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nt;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / nt;
  const double center = (p + z2 / (2.0 * nt)) / denom;
  const double half =
      (kZ95 / denom) * std::sqrt(p * (1.0 - p) / nt + z2 / (4.0 * nt * nt));
  // At the boundary counts the exact Wilson endpoint is 0 (resp. 1); computing
  // center - half leaves a rounding residue that would hide genuinely
  // zero-frequency cells from the audit, so pin the endpoints exactly.
  double lo = successes == 0 ? 0.0 : center - half;
  double hi = successes == trials ? 1.0 : center + half;
  if (lo < 0.0) lo = 0.0;
  if (hi > 1.0) hi = 1.0;
  return {lo, hi};
}

int neighbor_row(const Dataset& x, const Dataset& x_prime) {
  if (x.d() != x_prime.d()) throw InputError("neighbor datasets must share d");
  if (x.n() != x_prime.n()) throw InputError("neighbor datasets must share n");
  for (int j = 0; j < x.d(); ++j)
    if (x.group(j).cols() != x_prime.group(j).cols())
      throw InputError("neighbor datasets must share group widths");
  int row = -1;
  for (int i = 0; i < x.n(); ++i) {
    bool differs = false;
    for (int j = 0; j < x.d() && !differs; ++j)
      if (x.group(j).row(i) != x_prime.group(j).row(i)) differs = true;
    if (!differs) continue;
    if (row >= 0) throw InputError("datasets differ in more than one row");
    row = i;
  }
  if (row < 0) throw InputError("datasets are identical, not neighbors");
  return row;
}

namespace {

// log((num - delta) / den) with the audit's edge conventions.
double loss_branch(double num, double den, double delta, bool& unbounded) {
  const double adj = num - delta;
  if (adj <= 0.0) return -std::numeric_limits<double>::infinity();
  if (den <= 0.0) {
    unbounded = true;
    return std::numeric_limits<double>::infinity();
  }
  return std::log(adj / den);
}

}  // namespace

AuditReport audit_epsilon(const std::function<bool(const Dataset&, Rng&)>& mechanism,
                          const Dataset& x, const Dataset& x_prime, long draws,
                          double delta, Rng& rng) {
  if (!mechanism) throw InputError("mechanism must be callable");
  if (draws < 10000) throw InputError("audit needs at least 1e4 draws");
  if (!(delta >= 0.0) || delta >= 1.0) throw InputError("delta must be in [0, 1)");
  neighbor_row(x, x_prime);  // validates the pair

  Rng side_x = rng.fork(0);
  Rng side_xp = rng.fork(1);
  long rej_x = 0, rej_xp = 0;
  for (long r = 0; r < draws; ++r) {
    Rng child = side_x.fork(static_cast<std::uint64_t>(r));
    if (mechanism(x, child)) ++rej_x;
  }
  for (long r = 0; r < draws; ++r) {
    Rng child = side_xp.fork(static_cast<std::uint64_t>(r));
    if (mechanism(x_prime, child)) ++rej_xp;
  }

  const double nd = static_cast<double>(draws);
  const double p_rej_x = static_cast<double>(rej_x) / nd;
  const double p_rej_xp = static_cast<double>(rej_xp) / nd;

  AuditReport report;
  report.draws = draws;
  {
    bool unbounded = false;
    const double rej = loss_branch(p_rej_x, p_rej_xp, delta, unbounded);
    const double acc = loss_branch(1.0 - p_rej_x, 1.0 - p_rej_xp, delta, unbounded);
    report.estimate = std::max(rej, acc);
  }
  {
    bool unbounded = false;
    const auto wil_rej_x = wilson_interval(rej_x, draws);
    const auto wil_rej_xp = wilson_interval(rej_xp, draws);
    const auto wil_acc_x = wilson_interval(draws - rej_x, draws);
    const auto wil_acc_xp = wilson_interval(draws - rej_xp, draws);
    const double rej = loss_branch(wil_rej_x.second, wil_rej_xp.first, delta, unbounded);
    const double acc = loss_branch(wil_acc_x.second, wil_acc_xp.first, delta, unbounded);
    report.upper = std::max(rej, acc);
    report.unbounded = unbounded;
  }
  return report;
}

}  // namespace dpdhsic
