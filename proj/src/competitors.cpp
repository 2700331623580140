#include "dpdhsic/competitors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "dpdhsic/dhsic.hpp"
#include "dpdhsic/kernels.hpp"

namespace dpdhsic {

namespace {

constexpr std::uint64_t kOrderSalt = 0x6f72646572ull;  // stream tag for the order shuffle

// Binomial(m, q) pmf by the stable ratio recurrence.
std::vector<double> binom_pmf(int m, double q) {
  std::vector<double> pmf(static_cast<std::size_t>(m) + 1, 0.0);
  if (q >= 1.0) {
    pmf[static_cast<std::size_t>(m)] = 1.0;
    return pmf;
  }
  pmf[0] = std::pow(1.0 - q, m);
  const double ratio = q / (1.0 - q);
  for (int k = 0; k < m; ++k)
    pmf[static_cast<std::size_t>(k + 1)] =
        pmf[static_cast<std::size_t>(k)] * ratio * (m - k) / (k + 1.0);
  return pmf;
}

// suffix[k] = P(Bin >= k), accumulated from the top for accuracy.
std::vector<double> binom_suffix(const std::vector<double>& pmf) {
  std::vector<double> suffix(pmf.size() + 1, 0.0);
  for (int k = static_cast<int>(pmf.size()) - 1; k >= 0; --k)
    suffix[static_cast<std::size_t>(k)] =
        suffix[static_cast<std::size_t>(k) + 1] + pmf[static_cast<std::size_t>(k)];
  return suffix;
}

// P(Bin(m, q) + Lap(1/xi) > c) for finite xi, by exact convolution.
double conv_tail(const std::vector<double>& pmf, double xi, double c) {
  double acc = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    const double t = (c - static_cast<double>(k)) * xi;
    const double tail = t >= 0 ? 0.5 * std::exp(-t) : 1.0 - 0.5 * std::exp(t);
    acc += pmf[k] * tail;
  }
  return acc;
}

// Root of P(Bin + Lap > c) = alpha in c (P is continuous and strictly
// decreasing, so this is also the smallest c with the tail <= alpha).
double conv_threshold(const std::vector<double>& pmf, double xi, double alpha) {
  const double step = 1.0 + 10.0 / xi;
  double lo = 0.0;
  double hi = static_cast<double>(pmf.size());
  for (int guard = 0; conv_tail(pmf, xi, lo) <= alpha && guard < 10000; ++guard) lo -= step;
  for (int guard = 0; conv_tail(pmf, xi, hi) > alpha && guard < 10000; ++guard) hi += step;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (conv_tail(pmf, xi, mid) > alpha)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

// Smallest integer c with P(Bin > c) <= alpha (always <= m).
int binom_threshold(const std::vector<double>& suffix, double alpha) {
  const int m = static_cast<int>(suffix.size()) - 2;
  for (int c = 0; c <= m; ++c)
    if (suffix[static_cast<std::size_t>(c) + 1] <= alpha) return c;
  return m;
}

int subset_count(int n) {
  int m = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while ((m + 1) * (m + 1) <= n) ++m;
  while (m > 1 && m * m > n) --m;
  return m;
}

// Shuffle rows once, then split into m contiguous near-equal subsets (the
// first n mod m subsets get one extra row).
std::vector<Dataset> split_subsets(const Dataset& dataset, int m, Rng& shuffle_rng) {
  const int n = dataset.n();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i >= 1; --i) {
    const auto k = shuffle_rng.below(static_cast<std::uint32_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]);
  }
  std::vector<Dataset> subsets;
  subsets.reserve(static_cast<std::size_t>(m));
  int start = 0;
  for (int s = 0; s < m; ++s) {
    const int size = n / m + (s < n % m ? 1 : 0);
    std::vector<Matrix> groups;
    groups.reserve(static_cast<std::size_t>(dataset.d()));
    for (int j = 0; j < dataset.d(); ++j) {
      const Matrix& g = dataset.group(j);
      Matrix sub(size, g.cols());
      for (int i = 0; i < size; ++i)
        sub.row(i) = g.row(perm[static_cast<std::size_t>(start + i)]);
      groups.push_back(std::move(sub));
    }
    subsets.emplace_back(std::move(groups));
    start += size;
  }
  return subsets;
}

}  // namespace

double permutation_dhsic_p_value(const Dataset& dataset, std::vector<KernelSpec> specs,
                                 int B, Rng& rng) {
  specs = resolve_bandwidths(dataset, std::move(specs));
  const auto grams = gram_all(dataset, specs);
  const auto bound = v_sensitivity(dataset.d(), product_bound(specs), dataset.n());
  const TestConfig config(0.05, B, 0);
  const auto out = dp_resampling_core(
      dataset.n(), dataset.d(),
      [&](const Resampler& r) {
        return std::sqrt(std::max(v_stat_squared_resampled(grams, r), 0.0));
      },
      bound, ResamplerKind::Permutation, PrivacyParams::non_private(), config, rng);
  return out.dp_p_value;
}

TestOutcome mdphsic_test(const Dataset& dataset, std::vector<KernelSpec> specs,
                         const PrivacyParams& privacy, const TestConfig& config,
                         Rng& rng, std::vector<int> order) {
  config.validate();
  const int d = dataset.d();
  const int n = dataset.n();
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = rng.fork(kOrderSalt);
    for (int i = d - 1; i >= 1; --i) {
      const auto k = shuffle_rng.below(static_cast<std::uint32_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(k)]);
    }
  } else {
    if (static_cast<int>(order.size()) != d)
      throw InputError("order must list every group exactly once");
    std::vector<char> seen(static_cast<std::size_t>(d), 0);
    for (const int j : order) {
      if (j < 0 || j >= d || seen[static_cast<std::size_t>(j)])
        throw InputError("order must be a permutation of 0..d-1");
      seen[static_cast<std::size_t>(j)] = 1;
    }
  }

  specs = resolve_bandwidths(dataset, std::move(specs));
  const auto grams = gram_all(dataset, specs);

  const double steps = static_cast<double>(d - 1);
  const PrivacyParams sub_privacy(privacy.epsilon / steps, privacy.delta / steps);
  const TestConfig sub_config(config.alpha / steps, config.B, config.seed);

  // Running Hadamard product of the Grams already incorporated.
  std::vector<GramMatrix> pair(2);
  pair[0].values = grams[static_cast<std::size_t>(order[0])].values;
  pair[0].bound = specs[static_cast<std::size_t>(order[0])].bound;

  TestOutcome best;
  best.dp_p_value = std::numeric_limits<double>::infinity();
  bool any_reject = false;
  for (int j = 1; j < d; ++j) {
    const int g = order[static_cast<std::size_t>(j)];
    pair[1] = grams[static_cast<std::size_t>(g)];
    SensitivityBound bound;
    bound.delta_t = 4.0 * std::sqrt(pair[0].bound * pair[1].bound) / n;
    bound.kind = StatisticKind::VSqrt;
    bound.provenance = "two-block HSIC root: 4 sqrt(K_A K_B) / n";
    Rng child = rng.fork(static_cast<std::uint64_t>(j));
    auto out = dp_resampling_core(
        n, 2,
        [&](const Resampler& r) {
          return std::sqrt(std::max(v_stat_squared_resampled(pair, r), 0.0));
        },
        bound, ResamplerKind::Permutation, sub_privacy, sub_config, child);
    any_reject = any_reject || out.reject;
    if (out.dp_p_value < best.dp_p_value) best = std::move(out);
    if (j + 1 < d) {
      pair[0].values = pair[0].values.cwiseProduct(pair[1].values);
      pair[0].bound *= pair[1].bound;
    }
  }

  best.reject = any_reject;
  best.B = config.B;
  best.private_internals = std::isfinite(privacy.xi());
  best.level_guarantee = LevelGuarantee::Exact;
  return best;
}

TestOutcome tot_dhsic_test(const Dataset& dataset, std::vector<KernelSpec> specs,
                           const PrivacyParams& privacy, const TestConfig& config,
                           Rng& rng) {
  config.validate();
  const int n = dataset.n();
  if (n < 16) throw InputError("test-of-tests needs n >= 16");
  const double alpha0 = 5.0 * config.alpha;
  if (alpha0 >= 1.0) throw InputError("test-of-tests needs alpha < 0.2");

  const int m = subset_count(n);
  Rng shuffle_rng = rng.fork(0);
  const auto subsets = split_subsets(dataset, m, shuffle_rng);

  std::vector<double> p_values(static_cast<std::size_t>(m));
  int s_count = 0;
  for (int i = 0; i < m; ++i) {
    Rng child = rng.fork(static_cast<std::uint64_t>(2 + i));
    const double p = permutation_dhsic_p_value(subsets[static_cast<std::size_t>(i)],
                                               specs, config.B, child);
    p_values[static_cast<std::size_t>(i)] = p;
    if (p <= alpha0) ++s_count;
  }

  const double xi = privacy.xi();
  Rng noise_rng = rng.fork(1);
  const double lap_scale = std::isfinite(xi) ? 1.0 / xi : 0.0;
  const double s_noisy = static_cast<double>(s_count) + laplace(noise_rng, lap_scale);

  const auto pmf = binom_pmf(m, alpha0);
  const auto suffix = binom_suffix(pmf);

  TestOutcome out;
  if (std::isfinite(xi)) {
    const double cstar = conv_threshold(pmf, xi, config.alpha);
    out.reject = s_noisy > cstar;
    out.dp_p_value = conv_tail(pmf, xi, s_noisy);
  } else {
    const int cstar = binom_threshold(suffix, config.alpha);
    out.reject = s_noisy > static_cast<double>(cstar);
    const int k = std::clamp(static_cast<int>(std::llround(s_noisy)), 0, m + 1);
    out.dp_p_value = suffix[static_cast<std::size_t>(k)];
  }
  out.m0 = s_noisy;
  out.noise_scale = lap_scale;
  out.B = config.B;
  out.private_internals = std::isfinite(xi);
  out.level_guarantee = LevelGuarantee::Exact;
  out.noised_stats = std::move(p_values);  // diagnostic: per-subset p-values (NOT DP)
  return out;
}

double rr_keep_probability(double epsilon) {
  if (std::isnan(epsilon) || epsilon < 0) throw InputError("epsilon must be >= 0");
  return 1.0 / (1.0 + std::exp(-epsilon));  // exactly 1 when epsilon = inf
}

int sar_min_subsets(double epsilon) {
  const double p = rr_keep_probability(epsilon);
  const double signal = (2.0 * p - 1.0) * (2.0 * p - 1.0);
  if (signal < 3e-9) return std::numeric_limits<int>::max();
  return static_cast<int>(std::ceil(3.0 / signal));
}

TestOutcome sar_dhsic_test(const Dataset& dataset, std::vector<KernelSpec> specs,
                           const PrivacyParams& privacy, const TestConfig& config,
                           Rng& rng) {
  config.validate();
  const int n = dataset.n();
  const double alpha0 = 5.0 * config.alpha;
  if (alpha0 >= 1.0) throw InputError("subsample-and-aggregate needs alpha < 0.2");

  const int m = subset_count(n);
  const double p = rr_keep_probability(privacy.epsilon);
  const double q0 = alpha0 * p + (1.0 - alpha0) * (1.0 - p);
  const auto pmf = binom_pmf(m, q0);
  const auto suffix = binom_suffix(pmf);
  const int cstar = binom_threshold(suffix, config.alpha);

  TestOutcome out;
  out.noise_scale = 1.0 - p;  // randomized-response flip probability
  out.B = config.B;
  out.private_internals = std::isfinite(privacy.xi());
  out.level_guarantee = LevelGuarantee::Exact;

  // Below the minimum operating size the test deterministically accepts:
  // subsets must hold >= 4 rows, the flip noise must be beatable within m
  // bits, and the rejection region must be nonempty.
  if (n / m < 4 || m < sar_min_subsets(privacy.epsilon) || cstar >= m) {
    out.reject = false;
    out.dp_p_value = 1.0;
    return out;
  }

  Rng shuffle_rng = rng.fork(0);
  const auto subsets = split_subsets(dataset, m, shuffle_rng);

  std::vector<char> bits(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i) {
    Rng child = rng.fork(static_cast<std::uint64_t>(2 + i));
    const double pv = permutation_dhsic_p_value(subsets[static_cast<std::size_t>(i)],
                                                specs, config.B, child);
    bits[static_cast<std::size_t>(i)] = pv <= alpha0 ? 1 : 0;
  }

  Rng flip_rng = rng.fork(1);
  int total = 0;
  std::vector<double> released(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const bool keep = flip_rng.uniform() < p;
    const int y = keep ? bits[static_cast<std::size_t>(i)]
                       : 1 - bits[static_cast<std::size_t>(i)];
    released[static_cast<std::size_t>(i)] = y;
    total += y;
  }

  out.reject = total > cstar;
  out.dp_p_value = suffix[static_cast<std::size_t>(std::clamp(total, 0, m + 1))];
  out.m0 = static_cast<double>(total);
  out.noised_stats = std::move(released);  // the privatized response bits
  return out;
}

}  // namespace dpdhsic
