#include "dpdhsic/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace dpdhsic {

Resampler identity_resampler(int n, int d) {
  if (n < 1) throw InputError("need n >= 1");
  if (d < 2) throw InputError("need d >= 2");
  Resampler r;
  r.kind = ResamplerKind::Identity;
  r.maps.assign(static_cast<std::size_t>(d), std::vector<std::int32_t>(static_cast<std::size_t>(n)));
  for (auto& m : r.maps) std::iota(m.begin(), m.end(), 0);
  return r;
}

Resampler draw_permutation(int n, int d, Rng& rng) {
  Resampler r = identity_resampler(n, d);
  r.kind = ResamplerKind::Permutation;
  // Map 0 stays the identity; only relative permutations matter.
  for (int j = 1; j < d; ++j) {
    auto& m = r.maps[static_cast<std::size_t>(j)];
    for (int i = n - 1; i >= 1; --i) {
      const auto k = rng.below(static_cast<std::uint32_t>(i + 1));
      std::swap(m[static_cast<std::size_t>(i)], m[static_cast<std::size_t>(k)]);
    }
  }
  return r;
}

Resampler draw_bootstrap(int n, int d, Rng& rng) {
  Resampler r = identity_resampler(n, d);
  r.kind = ResamplerKind::Bootstrap;
  for (auto& m : r.maps)
    for (auto& v : m) v = static_cast<std::int32_t>(rng.below(static_cast<std::uint32_t>(n)));
  return r;
}

Dataset apply(const Dataset& dataset, const Resampler& resampler) {
  const int n = dataset.n();
  const int d = dataset.d();
  if (static_cast<int>(resampler.maps.size()) != d)
    throw InputError("resampler must carry one index map per group");
  std::vector<Matrix> groups;
  groups.reserve(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const auto& m = resampler.maps[static_cast<std::size_t>(j)];
    if (static_cast<int>(m.size()) != n)
      throw InputError("resampler index map length must equal n");
    const Matrix& g = dataset.group(j);
    Matrix out(n, g.cols());
    for (int i = 0; i < n; ++i) {
      const auto v = m[static_cast<std::size_t>(i)];
      if (v < 0 || v >= n) throw InputError("resampler index out of range");
      out.row(i) = g.row(v);
    }
    groups.push_back(std::move(out));
  }
  return Dataset(std::move(groups));
}

int rejection_cutoff(double alpha, int B) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw InputError("alpha must be in (0, 1)");
  if (B < 1) throw InputError("B must be >= 1");
  return static_cast<int>(std::floor(alpha * (B + 1.0)));
}

double alpha_star(double alpha, int B) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw InputError("alpha must be in (0, 1)");
  if (B < 1) throw InputError("B must be >= 1");
  return std::max(((B + 1.0) * alpha - 1.0) / B, 0.0);
}

bool quantile_indicator(double m0, const std::vector<double>& ms, double alpha) {
  const int B = static_cast<int>(ms.size());
  if (B < 1) throw InputError("need at least one resampled statistic");
  const int t = rejection_cutoff(alpha, B);
  const int rank = B + 1 - t;  // 1-based rank of the empirical (1-alpha) quantile
  if (rank <= 0) return true;  // alpha so large every outcome rejects
  if (t == 0) return false;    // (B+1) alpha < 1: no rejection possible
  std::vector<double> pool;
  pool.reserve(static_cast<std::size_t>(B) + 1);
  pool.push_back(m0);
  pool.insert(pool.end(), ms.begin(), ms.end());
  std::nth_element(pool.begin(), pool.begin() + (rank - 1), pool.end());
  const double q = pool[static_cast<std::size_t>(rank - 1)];
  return m0 > q;
}

TestOutcome dp_resampling_core(int n, int d,
                               const std::function<double(const Resampler&)>& statistic_of,
                               const SensitivityBound& bound, ResamplerKind kind,
                               const PrivacyParams& privacy, const TestConfig& config,
                               Rng& rng) {
  if (n < 1) throw InputError("need n >= 1");
  if (d < 2) throw InputError("need d >= 2");
  if (!statistic_of) throw InputError("statistic callback must be callable");
  config.validate();
  const double scale = noise_scale(bound, privacy);
  const int B = config.B;

  std::vector<double> ms(static_cast<std::size_t>(B) + 1);
  for (int i = 0; i <= B; ++i) {
    // Per-index stream: the resampler is drawn first, the noise second, so
    // index 0 (identity, draws nothing) takes its noise as the first variate.
    Rng child = rng.fork(static_cast<std::uint64_t>(i));
    Resampler res;
    if (i == 0) {
      res = identity_resampler(n, d);
    } else {
      switch (kind) {
        case ResamplerKind::Permutation:
          res = draw_permutation(n, d, child);
          break;
        case ResamplerKind::Bootstrap:
          res = draw_bootstrap(n, d, child);
          break;
        case ResamplerKind::Identity:
          res = identity_resampler(n, d);
          break;
      }
    }
    const double zeta = laplace(child, scale);
    ms[static_cast<std::size_t>(i)] = statistic_of(res) + zeta;
  }

  int count = 0;
  for (int i = 1; i <= B; ++i)
    if (ms[static_cast<std::size_t>(i)] >= ms[0]) ++count;

  TestOutcome out;
  out.reject = (count + 1) <= rejection_cutoff(config.alpha, B);
  out.dp_p_value = (count + 1.0) / (B + 1.0);
  out.m0 = ms[0];
  out.noise_scale = scale;
  out.B = B;
  out.private_internals = std::isfinite(privacy.xi());
  out.level_guarantee = (kind == ResamplerKind::Permutation)
                            ? LevelGuarantee::Exact
                            : LevelGuarantee::AsymptoticOnly;
  out.noised_stats = std::move(ms);
  return out;
}

TestOutcome dp_resampling_test(const Dataset& dataset,
                               const std::function<double(const Dataset&)>& statistic,
                               const SensitivityBound& bound, ResamplerKind kind,
                               const PrivacyParams& privacy, const TestConfig& config,
                               Rng& rng) {
  if (!statistic) throw InputError("statistic callback must be callable");
  return dp_resampling_core(
      dataset.n(), dataset.d(),
      [&](const Resampler& r) { return statistic(apply(dataset, r)); }, bound, kind,
      privacy, config, rng);
}

}  // namespace dpdhsic
