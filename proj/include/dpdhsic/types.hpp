#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace dpdhsic {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Invalid argument or malformed input data.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A guarded exact-enumeration routine was asked for more work than allowed.
struct TooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Median heuristic cannot produce a positive bandwidth (all rows identical).
struct DegenerateBandwidth : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Composed privacy budgets reached delta >= 1.
struct DeltaOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed persisted file (CSV / DAG / JSON); carries a 1-based line number
/// when one is known (0 otherwise).
struct ParseError : std::runtime_error {
  int line;
  ParseError(const std::string& msg, int line_number = 0)
      : std::runtime_error(line_number > 0
                               ? msg + " (line " + std::to_string(line_number) + ")"
                               : msg),
        line(line_number) {}
};

/// Filesystem-level failure (missing file, unwritable path).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// n joint observations split into d column groups; group j is an n x p_j
/// matrix. Immutable after construction. All indices are 0-based.
class Dataset {
 public:
  explicit Dataset(std::vector<Matrix> groups) : groups_(std::move(groups)) {
    if (groups_.size() < 2) throw InputError("Dataset needs at least 2 groups");
    const auto rows = groups_[0].rows();
    if (rows < 1) throw InputError("Dataset needs at least 1 observation");
    for (const auto& g : groups_) {
      if (g.rows() != rows)
        throw InputError("Dataset group row counts do not match");
      if (g.cols() < 1) throw InputError("Dataset group must have >= 1 column");
      if (!g.allFinite()) throw InputError("Dataset contains non-finite entries");
    }
  }

  int n() const { return static_cast<int>(groups_[0].rows()); }
  int d() const { return static_cast<int>(groups_.size()); }
  const Matrix& group(int j) const { return groups_.at(static_cast<size_t>(j)); }
  const std::vector<Matrix>& groups() const { return groups_; }

 private:
  std::vector<Matrix> groups_;
};

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

enum class KernelKind { Gaussian, Laplacian, Linear };

/// A kernel choice for one group. Gaussian/Laplacian are the non-normalized
/// forms with sup = 1 (k(x,x) = 1); the linear kernel needs a caller-declared
/// domain bound (it is never inferred from data). bandwidth <= 0 means
/// "resolve by the median heuristic before use".
struct KernelSpec {
  KernelKind kind = KernelKind::Gaussian;
  double bandwidth = 0.0;  // nu_j; meaningful for Gaussian/Laplacian only
  double bound = 1.0;      // K^j = sup of the kernel on the declared domain

  static KernelSpec gaussian(double nu = 0.0) { return {KernelKind::Gaussian, nu, 1.0}; }
  static KernelSpec laplacian(double nu = 0.0) { return {KernelKind::Laplacian, nu, 1.0}; }
  static KernelSpec linear(double domain_bound) {
    if (!(domain_bound > 0)) throw InputError("linear kernel needs a positive domain bound");
    return {KernelKind::Linear, 0.0, domain_bound};
  }
};

// ---------------------------------------------------------------------------
// Privacy budget
// ---------------------------------------------------------------------------

/// (epsilon, delta) privacy budget with the effective noise denominator
/// xi = epsilon + log(1/(1-delta)). epsilon may be +inf (non-private limit,
/// noise scale 0). xi must be strictly positive.
struct PrivacyParams {
  double epsilon;
  double delta;

  explicit PrivacyParams(double eps, double del = 0.0) : epsilon(eps), delta(del) {
    if (std::isnan(eps) || eps < 0) throw InputError("epsilon must be >= 0");
    if (!(del >= 0.0) || del >= 1.0) throw InputError("delta must be in [0, 1)");
    if (!(xi() > 0)) throw InputError("privacy budget is empty (xi must be > 0)");
  }

  /// xi_{eps,delta} = eps + log(1/(1-delta)); exactly eps when delta = 0.
  double xi() const { return epsilon - std::log1p(-delta); }

  static PrivacyParams non_private() {
    return PrivacyParams(std::numeric_limits<double>::infinity(), 0.0);
  }
};

// ---------------------------------------------------------------------------
// Test configuration and outcome
// ---------------------------------------------------------------------------

/// Level, resample count and seed shared by all resampling tests.
struct TestConfig {
  double alpha = 0.05;
  int B = 200;
  std::uint64_t seed = 0;

  TestConfig() = default;
  TestConfig(double a, int b, std::uint64_t s) : alpha(a), B(b), seed(s) { validate(); }

  void validate() const {
    if (!(alpha > 0.0) || !(alpha < 1.0)) throw InputError("alpha must be in (0, 1)");
    if (B < 1) throw InputError("B must be >= 1");
  }

  /// True when floor((B+1) alpha) = 0, i.e. the test can never reject.
  bool underpowered() const { return (B + 1) * alpha < 1.0; }
};

enum class ResamplerKind { Permutation, Bootstrap, Identity };

/// d index maps of length n; resampled row i of group j is original row
/// maps[j][i]. Permutation kind keeps map 0 as the identity (only relative
/// permutations matter) and requires every map to be a bijection.
struct Resampler {
  ResamplerKind kind = ResamplerKind::Identity;
  std::vector<std::vector<std::int32_t>> maps;
};

enum class LevelGuarantee { Exact, AsymptoticOnly };

/// Result of a DP resampling test. Only `reject` is differentially private
/// output; every other field is diagnostic and must not be released when
/// private_internals is true.
struct TestOutcome {
  bool reject = false;
  double dp_p_value = 1.0;  // (#{M_i >= M_0} + 1)/(B+1); NOT DP-safe
  double m0 = 0.0;          // noised statistic on the unpermuted data; NOT DP-safe
  double noise_scale = 0.0; // Laplace scale 2*Delta_T/xi actually used
  int B = 0;
  bool private_internals = true;     // false only when xi = inf (no privacy claimed)
  LevelGuarantee level_guarantee = LevelGuarantee::Exact;
  std::vector<double> noised_stats;  // M_0..M_B, diagnostic; NOT DP-safe
};

}  // namespace dpdhsic
