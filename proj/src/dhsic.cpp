#include "dpdhsic/dhsic.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dpdhsic {

StatisticValue StatisticValue::from_squared(double sq) {
  StatisticValue v;
  v.squared = sq;
  v.value = std::sqrt(std::max(sq, 0.0));
  return v;
}

namespace {

// Compensated (Kahan) accumulator.
struct Kahan {
  double s = 0.0;
  double c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  // Fold another accumulator in, keeping its compensation term.
  void merge(const Kahan& o) {
    add(o.s);
    add(o.c);
  }
};

int check_grams(const std::vector<GramMatrix>& grams) {
  if (grams.size() < 2) throw InputError("need at least 2 Gram matrices");
  const int n = grams[0].n();
  if (n < 1) throw InputError("empty Gram matrix");
  for (const auto& g : grams) {
    if (g.values.rows() != g.values.cols())
      throw InputError("Gram matrix must be square");
    if (g.n() != n) throw InputError("Gram matrix sizes do not match");
  }
  return n;
}

void check_maps(const Resampler& r, int n, int d) {
  if (static_cast<int>(r.maps.size()) != d)
    throw InputError("resampler must carry one index map per group");
  for (const auto& m : r.maps) {
    if (static_cast<int>(m.size()) != n)
      throw InputError("resampler index map length must equal n");
    for (const auto v : m)
      if (v < 0 || v >= n) throw InputError("resampler index out of range");
  }
}

struct IdentityIndex {
  std::int32_t at(int /*j*/, int i) const { return static_cast<std::int32_t>(i); }
};

struct GatherIndex {
  const std::vector<std::vector<std::int32_t>>* maps;
  std::int32_t at(int j, int i) const {
    return (*maps)[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  }
};

// Fused single pass over i: accumulates the cross-product sum (term1), the
// per-group grand sums (term2) and the row-mean product sum (term3) together.
// Entries are read as G_j(map_j[l], map_j[i]); the stored matrices are exactly
// symmetric, so with the column index fixed per i this walks one contiguous
// column of each Gram matrix per outer step. The inner loop is split over two
// accumulator lanes (even/odd l) to shorten the compensated-sum dependency
// chain; both evaluation paths (identity and gathered indices) run this exact
// instruction sequence, which is what makes them bitwise-comparable.
template <int D, typename IndexT>
double v_core_fixed(const GramMatrix* grams, const int n, const IndexT idx) {
  const double inv_n = 1.0 / static_cast<double>(n);
  Kahan term1_a, term1_b, term3;
  std::array<Kahan, D> grand{};
  std::array<const double*, D> base{};
  for (int j = 0; j < D; ++j) base[static_cast<std::size_t>(j)] = grams[j].values.data();
  const std::ptrdiff_t stride = n;
  for (int i = 0; i < n; ++i) {
    std::array<const double*, D> col{};
    for (int j = 0; j < D; ++j)
      col[static_cast<std::size_t>(j)] =
          base[static_cast<std::size_t>(j)] + stride * idx.at(j, i);
    std::array<double, D> rs_a{};
    std::array<double, D> rs_b{};
    int l = 0;
    for (; l + 1 < n; l += 2) {
      double pa = 1.0;
      double pb = 1.0;
      for (int j = 0; j < D; ++j) {
        const double va = col[static_cast<std::size_t>(j)][idx.at(j, l)];
        const double vb = col[static_cast<std::size_t>(j)][idx.at(j, l + 1)];
        rs_a[static_cast<std::size_t>(j)] += va;
        rs_b[static_cast<std::size_t>(j)] += vb;
        pa *= va;
        pb *= vb;
      }
      term1_a.add(pa);
      term1_b.add(pb);
    }
    if (l < n) {
      double pa = 1.0;
      for (int j = 0; j < D; ++j) {
        const double va = col[static_cast<std::size_t>(j)][idx.at(j, l)];
        rs_a[static_cast<std::size_t>(j)] += va;
        pa *= va;
      }
      term1_a.add(pa);
    }
    double rowprod = 1.0;
    for (int j = 0; j < D; ++j) {
      const double rs =
          rs_a[static_cast<std::size_t>(j)] + rs_b[static_cast<std::size_t>(j)];
      grand[static_cast<std::size_t>(j)].add(rs);
      rowprod *= rs * inv_n;
    }
    term3.add(rowprod);
  }
  term1_a.merge(term1_b);
  const double term1 = term1_a.s * inv_n * inv_n;
  double term2 = 1.0;
  for (int j = 0; j < D; ++j)
    term2 *= grand[static_cast<std::size_t>(j)].s * inv_n * inv_n;
  return term1 + term2 - 2.0 * inv_n * term3.s;
}

// Runtime-d fallback with the same loop structure as v_core_fixed.
template <typename IndexT>
double v_core_generic(const GramMatrix* grams, const int d, const int n,
                      const IndexT idx) {
  const double inv_n = 1.0 / static_cast<double>(n);
  Kahan term1_a, term1_b, term3;
  std::vector<Kahan> grand(static_cast<std::size_t>(d));
  std::vector<const double*> base(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) base[static_cast<std::size_t>(j)] = grams[j].values.data();
  std::vector<const double*> col(static_cast<std::size_t>(d));
  std::vector<double> rs_a(static_cast<std::size_t>(d));
  std::vector<double> rs_b(static_cast<std::size_t>(d));
  const std::ptrdiff_t stride = n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      col[static_cast<std::size_t>(j)] =
          base[static_cast<std::size_t>(j)] + stride * idx.at(j, i);
      rs_a[static_cast<std::size_t>(j)] = 0.0;
      rs_b[static_cast<std::size_t>(j)] = 0.0;
    }
    int l = 0;
    for (; l + 1 < n; l += 2) {
      double pa = 1.0;
      double pb = 1.0;
      for (int j = 0; j < d; ++j) {
        const double va = col[static_cast<std::size_t>(j)][idx.at(j, l)];
        const double vb = col[static_cast<std::size_t>(j)][idx.at(j, l + 1)];
        rs_a[static_cast<std::size_t>(j)] += va;
        rs_b[static_cast<std::size_t>(j)] += vb;
        pa *= va;
        pb *= vb;
      }
      term1_a.add(pa);
      term1_b.add(pb);
    }
    if (l < n) {
      double pa = 1.0;
      for (int j = 0; j < d; ++j) {
        const double va = col[static_cast<std::size_t>(j)][idx.at(j, l)];
        rs_a[static_cast<std::size_t>(j)] += va;
        pa *= va;
      }
      term1_a.add(pa);
    }
    double rowprod = 1.0;
    for (int j = 0; j < d; ++j) {
      const double rs =
          rs_a[static_cast<std::size_t>(j)] + rs_b[static_cast<std::size_t>(j)];
      grand[static_cast<std::size_t>(j)].add(rs);
      rowprod *= rs * inv_n;
    }
    term3.add(rowprod);
  }
  term1_a.merge(term1_b);
  const double term1 = term1_a.s * inv_n * inv_n;
  double term2 = 1.0;
  for (int j = 0; j < d; ++j)
    term2 *= grand[static_cast<std::size_t>(j)].s * inv_n * inv_n;
  return term1 + term2 - 2.0 * inv_n * term3.s;
}

// Dispatch on d only, identically for both index providers.
template <typename IndexT>
double v_core(const std::vector<GramMatrix>& grams, const int n, const IndexT idx) {
  switch (grams.size()) {
    case 2:
      return v_core_fixed<2>(grams.data(), n, idx);
    case 3:
      return v_core_fixed<3>(grams.data(), n, idx);
    case 4:
      return v_core_fixed<4>(grams.data(), n, idx);
    default:
      return v_core_generic(grams.data(), static_cast<int>(grams.size()), n, idx);
  }
}

double guarded_tuple_count(int n, int d) {
  double count = 1.0;
  for (int t = 0; t < 2 * d; ++t) count *= static_cast<double>(n);
  return count;
}

}  // namespace

double v_stat_squared(const std::vector<GramMatrix>& grams) {
  const int n = check_grams(grams);
  return v_core(grams, n, IdentityIndex{});
}

double v_stat_squared_resampled(const std::vector<GramMatrix>& grams,
                                const Resampler& resampler) {
  const int n = check_grams(grams);
  check_maps(resampler, n, static_cast<int>(grams.size()));
  return v_core(grams, n, GatherIndex{&resampler.maps});
}

double v_stat_naive(const std::vector<GramMatrix>& grams) {
  const int n = check_grams(grams);
  const int d = static_cast<int>(grams.size());
  if (guarded_tuple_count(n, d) > 1e8)
    throw TooLarge("v_stat_naive enumeration would exceed 1e8 tuples");

  // Denominators n^2, n^{2d}, n^{d+1} (all exactly representable below 2^53).
  double denom2 = 1.0, denom2d = 1.0, denomd1 = 1.0;
  for (int t = 0; t < 2; ++t) denom2 *= n;
  for (int t = 0; t < 2 * d; ++t) denom2d *= n;
  for (int t = 0; t < d + 1; ++t) denomd1 *= n;

  Kahan t1;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) {
      double p = 1.0;
      for (int j = 0; j < d; ++j) p *= grams[static_cast<std::size_t>(j)].values(i, l);
      t1.add(p);
    }

  // All tuples (a_1, b_1, ..., a_d, b_d) in [n]^{2d}.
  Kahan t2;
  {
    std::vector<int> t(static_cast<std::size_t>(2 * d), 0);
    while (true) {
      double p = 1.0;
      for (int j = 0; j < d; ++j)
        p *= grams[static_cast<std::size_t>(j)].values(t[static_cast<std::size_t>(2 * j)],
                                                       t[static_cast<std::size_t>(2 * j + 1)]);
      t2.add(p);
      int pos = 2 * d - 1;
      while (pos >= 0 && ++t[static_cast<std::size_t>(pos)] == n) {
        t[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
  }

  // All tuples (i, l_1, ..., l_d) in [n]^{d+1}.
  Kahan t3;
  {
    std::vector<int> t(static_cast<std::size_t>(d + 1), 0);
    while (true) {
      double p = 1.0;
      for (int j = 0; j < d; ++j)
        p *= grams[static_cast<std::size_t>(j)].values(t[0], t[static_cast<std::size_t>(j + 1)]);
      t3.add(p);
      int pos = d;
      while (pos >= 0 && ++t[static_cast<std::size_t>(pos)] == n) {
        t[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
  }

  return t1.s / denom2 + t2.s / denom2d - 2.0 * t3.s / denomd1;
}

StatisticValue empirical_dhsic(const Dataset& dataset, std::vector<KernelSpec> specs) {
  specs = resolve_bandwidths(dataset, std::move(specs));
  const auto grams = gram_all(dataset, specs);
  return StatisticValue::from_squared(v_stat_squared(grams));
}

namespace {

double lookup(const GramMatrix& g,
              const std::vector<std::vector<std::int32_t>>* maps, int j, int a,
              int b) {
  if (maps == nullptr) return g.values(a, b);
  const auto& m = (*maps)[static_cast<std::size_t>(j)];
  return g.values(m[static_cast<std::size_t>(a)], m[static_cast<std::size_t>(b)]);
}

// Distinct-index tuples (a_1, b_1, ..., a_d, b_d); the Gram factor for group j
// is multiplied in as soon as b_j is chosen.
void enum_pairs(int pos, double partial, std::vector<int>& t, std::vector<char>& used,
                const std::vector<GramMatrix>& grams,
                const std::vector<std::vector<std::int32_t>>* maps, int n,
                Kahan& acc) {
  const int d = static_cast<int>(grams.size());
  if (pos == 2 * d) {
    acc.add(partial);
    return;
  }
  for (int v = 0; v < n; ++v) {
    if (used[static_cast<std::size_t>(v)]) continue;
    used[static_cast<std::size_t>(v)] = 1;
    t[static_cast<std::size_t>(pos)] = v;
    double next = partial;
    if (pos % 2 == 1)
      next *= lookup(grams[static_cast<std::size_t>(pos / 2)], maps, pos / 2,
                     t[static_cast<std::size_t>(pos - 1)], v);
    enum_pairs(pos + 1, next, t, used, grams, maps, n, acc);
    used[static_cast<std::size_t>(v)] = 0;
  }
}

// Distinct-index tuples (i, l_1, ..., l_d); factor j is G_j(i, l_j).
void enum_star(int pos, double partial, std::vector<int>& t, std::vector<char>& used,
               const std::vector<GramMatrix>& grams,
               const std::vector<std::vector<std::int32_t>>* maps, int n,
               Kahan& acc) {
  const int d = static_cast<int>(grams.size());
  if (pos == d + 1) {
    acc.add(partial);
    return;
  }
  for (int v = 0; v < n; ++v) {
    if (used[static_cast<std::size_t>(v)]) continue;
    used[static_cast<std::size_t>(v)] = 1;
    t[static_cast<std::size_t>(pos)] = v;
    double next = partial;
    if (pos >= 1)
      next *= lookup(grams[static_cast<std::size_t>(pos - 1)], maps, pos - 1, t[0], v);
    enum_star(pos + 1, next, t, used, grams, maps, n, acc);
    used[static_cast<std::size_t>(v)] = 0;
  }
}

double u_stat_impl(const std::vector<GramMatrix>& grams,
                   const std::vector<std::vector<std::int32_t>>* maps) {
  const int n = check_grams(grams);
  const int d = static_cast<int>(grams.size());
  if (n < 2 * d) throw InputError("U-statistic needs n >= 2d");
  if (guarded_tuple_count(n, d) > 1e8)
    throw TooLarge("U-statistic enumeration would exceed 1e8 tuples; maximum n for d=" +
                   std::to_string(d) + " groups is " + std::to_string(u_stat_max_n(d)));

  Kahan sa;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) {
      if (i == l) continue;
      double p = 1.0;
      for (int j = 0; j < d; ++j)
        p *= lookup(grams[static_cast<std::size_t>(j)], maps, j, i, l);
      sa.add(p);
    }

  Kahan sb;
  {
    std::vector<int> t(static_cast<std::size_t>(2 * d), 0);
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    enum_pairs(0, 1.0, t, used, grams, maps, n, sb);
  }

  Kahan sc;
  {
    std::vector<int> t(static_cast<std::size_t>(d + 1), 0);
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    enum_star(0, 1.0, t, used, grams, maps, n, sc);
  }

  // Falling-factorial coefficients (n)_2, (n)_{2d}, (n)_{d+1}.
  double c2 = 1.0;
  for (int t = 0; t < 2; ++t) c2 /= static_cast<double>(n - t);
  double c2d = 1.0;
  for (int t = 0; t < 2 * d; ++t) c2d /= static_cast<double>(n - t);
  double cd1 = 2.0;
  for (int t = 0; t < d + 1; ++t) cd1 /= static_cast<double>(n - t);

  return c2 * sa.s + c2d * sb.s - cd1 * sc.s;
}

}  // namespace

double u_stat(const std::vector<GramMatrix>& grams) { return u_stat_impl(grams, nullptr); }

double u_stat_resampled(const std::vector<GramMatrix>& grams, const Resampler& resampler) {
  const int n = check_grams(grams);
  check_maps(resampler, n, static_cast<int>(grams.size()));
  return u_stat_impl(grams, &resampler.maps);
}

int u_stat_max_n(int d) {
  if (d < 2) throw InputError("need d >= 2");
  int n = 1;
  while (guarded_tuple_count(n + 1, d) <= 1e8) ++n;
  return n;
}

StatisticValue population_dhsic_discrete(const std::vector<double>& pmf,
                                         const std::vector<Matrix>& atoms,
                                         const std::vector<KernelSpec>& specs) {
  const int d = static_cast<int>(atoms.size());
  if (d < 2) throw InputError("need at least 2 groups");
  if (specs.size() != atoms.size())
    throw InputError("one kernel spec per group required");

  std::vector<int> counts(static_cast<std::size_t>(d));
  double total = 1.0;
  for (int j = 0; j < d; ++j) {
    const int a = static_cast<int>(atoms[static_cast<std::size_t>(j)].rows());
    if (a < 1) throw InputError("each group needs at least one atom");
    counts[static_cast<std::size_t>(j)] = a;
    total *= a;
  }
  if (total > 1e4) throw TooLarge("atom grid exceeds 1e4 joint states");
  const int states = static_cast<int>(total);
  if (static_cast<int>(pmf.size()) != states)
    throw InputError("pmf length must equal the joint atom count");

  double sum = 0.0;
  for (const double p : pmf) {
    if (!(p >= 0.0)) throw InputError("pmf entries must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InputError("pmf must sum to 1");

  // Row-major digit decode: group 0 varies slowest, group d-1 fastest.
  std::vector<int> stride(static_cast<std::size_t>(d), 1);
  for (int j = d - 2; j >= 0; --j)
    stride[static_cast<std::size_t>(j)] =
        stride[static_cast<std::size_t>(j + 1)] * counts[static_cast<std::size_t>(j + 1)];
  std::vector<std::vector<int>> digit(static_cast<std::size_t>(states),
                                      std::vector<int>(static_cast<std::size_t>(d)));
  for (int s = 0; s < states; ++s)
    for (int j = 0; j < d; ++j)
      digit[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] =
          (s / stride[static_cast<std::size_t>(j)]) % counts[static_cast<std::size_t>(j)];

  std::vector<GramMatrix> atom_grams;
  atom_grams.reserve(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j)
    atom_grams.push_back(
        gram(atoms[static_cast<std::size_t>(j)], specs[static_cast<std::size_t>(j)]));

  // Marginals per group.
  std::vector<std::vector<double>> marg(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j)
    marg[static_cast<std::size_t>(j)].assign(
        static_cast<std::size_t>(counts[static_cast<std::size_t>(j)]), 0.0);
  for (int s = 0; s < states; ++s)
    for (int j = 0; j < d; ++j)
      marg[static_cast<std::size_t>(j)]
          [static_cast<std::size_t>(digit[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)])] +=
          pmf[static_cast<std::size_t>(s)];

  Kahan term1;
  for (int s = 0; s < states; ++s) {
    if (pmf[static_cast<std::size_t>(s)] == 0.0) continue;
    for (int t = 0; t < states; ++t) {
      double p = pmf[static_cast<std::size_t>(s)] * pmf[static_cast<std::size_t>(t)];
      if (p == 0.0) continue;
      for (int j = 0; j < d; ++j)
        p *= atom_grams[static_cast<std::size_t>(j)].values(
            digit[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)],
            digit[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)]);
      term1.add(p);
    }
  }

  double term2 = 1.0;
  for (int j = 0; j < d; ++j) {
    const auto& mj = marg[static_cast<std::size_t>(j)];
    const auto& kj = atom_grams[static_cast<std::size_t>(j)].values;
    Kahan acc;
    for (int a = 0; a < counts[static_cast<std::size_t>(j)]; ++a)
      for (int b = 0; b < counts[static_cast<std::size_t>(j)]; ++b)
        acc.add(mj[static_cast<std::size_t>(a)] * mj[static_cast<std::size_t>(b)] * kj(a, b));
    term2 *= acc.s;
  }

  // w_j[x] = sum_a marg_j[a] k_j(x, a), the smoothed marginal at atom x.
  std::vector<std::vector<double>> w(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const auto& mj = marg[static_cast<std::size_t>(j)];
    const auto& kj = atom_grams[static_cast<std::size_t>(j)].values;
    auto& wj = w[static_cast<std::size_t>(j)];
    wj.assign(static_cast<std::size_t>(counts[static_cast<std::size_t>(j)]), 0.0);
    for (int x = 0; x < counts[static_cast<std::size_t>(j)]; ++x) {
      Kahan acc;
      for (int a = 0; a < counts[static_cast<std::size_t>(j)]; ++a)
        acc.add(mj[static_cast<std::size_t>(a)] * kj(x, a));
      wj[static_cast<std::size_t>(x)] = acc.s;
    }
  }
  Kahan term3;
  for (int s = 0; s < states; ++s) {
    double p = pmf[static_cast<std::size_t>(s)];
    if (p == 0.0) continue;
    for (int j = 0; j < d; ++j)
      p *= w[static_cast<std::size_t>(j)]
            [static_cast<std::size_t>(digit[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)])];
    term3.add(p);
  }

  return StatisticValue::from_squared(term1.s + term2 - 2.0 * term3.s);
}

}  // namespace dpdhsic
