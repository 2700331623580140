#include "dpdhsic/dpdhsic.hpp"

#include <cmath>
#include <utility>

#include "dpdhsic/dhsic.hpp"
#include "dpdhsic/kernels.hpp"

namespace dpdhsic {

TestOutcome dpdhsic_test(const Dataset& dataset, std::vector<KernelSpec> specs,
                         const PrivacyParams& privacy, const TestConfig& config,
                         Rng& rng) {
  specs = resolve_bandwidths(dataset, std::move(specs));
  const auto grams = gram_all(dataset, specs);
  const auto bound = v_sensitivity(dataset.d(), product_bound(specs), dataset.n());
  return dp_resampling_core(
      dataset.n(), dataset.d(),
      [&](const Resampler& r) {
        return std::sqrt(std::max(v_stat_squared_resampled(grams, r), 0.0));
      },
      bound, ResamplerKind::Permutation, privacy, config, rng);
}

TestOutcome dpdhsic_u_test(const Dataset& dataset, std::vector<KernelSpec> specs,
                           const PrivacyParams& privacy, const TestConfig& config,
                           Rng& rng) {
  specs = resolve_bandwidths(dataset, std::move(specs));
  const auto grams = gram_all(dataset, specs);
  const auto bound = u_sensitivity(dataset.d(), product_bound(specs), dataset.n());
  return dp_resampling_core(
      dataset.n(), dataset.d(),
      [&](const Resampler& r) { return u_stat_resampled(grams, r); }, bound,
      ResamplerKind::Permutation, privacy, config, rng);
}

TestOutcome dp_bootstrap_dhsic_test(const Dataset& dataset, std::vector<KernelSpec> specs,
                                    const PrivacyParams& privacy, const TestConfig& config,
                                    Rng& rng) {
  specs = resolve_bandwidths(dataset, std::move(specs));
  const auto grams = gram_all(dataset, specs);
  const auto bound = bootstrap_sensitivity(product_bound(specs));
  return dp_resampling_core(
      dataset.n(), dataset.d(),
      [&](const Resampler& r) {
        return std::sqrt(std::max(v_stat_squared_resampled(grams, r), 0.0));
      },
      bound, ResamplerKind::Bootstrap, privacy, config, rng);
}

}  // namespace dpdhsic
