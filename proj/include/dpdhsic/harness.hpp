#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpdhsic/rng.hpp"
#include "dpdhsic/types.hpp"

namespace dpdhsic {

/// Data-generating process for one experiment. `id` is one of
/// null-gaussian (n, d), product (n, sigma), toeplitz (n, d, rho, optional
/// k_groups for random grouping), two-atom (n, d, v, gap), sem-chain
/// (n, d, noise_sd; linear+tanh alternating chain).
struct GeneratorParams {
  std::string id = "null-gaussian";
  int n = 300;
  int d = 3;
  double sigma = 1.0;
  double rho = 0.3;
  int k_groups = 0;  // 0 = no regrouping (toeplitz only)
  double v = 0.1;
  double gap = 2.0;
  double noise_sd = 1.0;
};

/// One test under test. `id` is one of dpdhsic, dpdhsic-u, dp-bootstrap,
/// mdphsic, tot, sar. Kernels are Gaussian with median-heuristic bandwidths.
struct TestParams {
  std::string id = "dpdhsic";
  double epsilon = 1.0;
  double delta = 0.0;
  double alpha = 0.05;
  int B = 200;
};

/// Sweep of one scalar parameter (n | epsilon | d | rho | sigma), overriding
/// the corresponding base value per grid point.
struct GridSweep {
  std::string param;
  std::vector<double> values;
};

/// A full Monte Carlo experiment: the union of the sweeps, crossed with the
/// listed tests, `replications` independent replicates per cell.
struct ExperimentSpec {
  GeneratorParams generator;
  std::vector<TestParams> tests;
  int replications = 500;
  std::vector<GridSweep> grid;
  std::uint64_t seed = 0;
};

/// One estimated rejection rate. Matches the results CSV schema
/// param_name,param_value,test,n,d,epsilon,delta,alpha,B,reps,reject_rate,
/// ci_lo,ci_hi,seconds (fixed order, header required).
struct ResultRow {
  std::string param_name;
  double param_value = 0.0;
  std::string test;
  int n = 0;
  int d = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double alpha = 0.05;
  int B = 0;
  int reps = 0;
  double reject_rate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double seconds = 0.0;
};

struct RunOptions {
  int threads = 1;
  bool record_timing = true;
};

/// Materialize one dataset from a generator id (see GeneratorParams).
Dataset generate_dataset(const GeneratorParams& gen, Rng& rng);

/// Dispatch one test by id (see TestParams) with explicit kernel specs.
TestOutcome run_named_test(const TestParams& test, const Dataset& dataset,
                           const std::vector<KernelSpec>& specs, Rng& rng);

/// Generate data and run one test: replicate r draws its data and test
/// randomness from rng.fork(r), so the estimate is a pure function of
/// (seed path, spec) independent of thread count. Throws on the first failed
/// replicate. Wilson 95% interval.
ResultRow estimate_rejection_rate(const GeneratorParams& gen, const TestParams& test,
                                  int reps, Rng& rng, const RunOptions& options = {});

/// Run every (sweep value x test) cell, appending rows to `csv_path`
/// incrementally in grid order; cells already present in the file are skipped
/// (resume support). Returns all rows (existing + new).
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, const std::string& csv_path,
                                      const RunOptions& options = {});

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> read_results_csv(const std::string& path);

/// Serialize one row / the header in the exact CSV schema (shortest
/// round-trip number formatting, locale-independent).
std::string results_csv_header();
std::string format_result_row(const ResultRow& row);

/// Parse/validate an ExperimentSpec from JSON text. Unknown or missing keys
/// are rejected with a JSON-pointer-style path in the message.
ExperimentSpec parse_experiment_json(const std::string& json_text);

}  // namespace dpdhsic
