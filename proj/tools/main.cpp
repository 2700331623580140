#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpdhsic/csv.hpp"
#include "dpdhsic/dagcheck.hpp"
#include "dpdhsic/dhsic.hpp"
#include "dpdhsic/harness.hpp"
#include "dpdhsic/privacy.hpp"
#include "dpdhsic/simgen.hpp"

namespace {

using namespace dpdhsic;

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

Dataset regroup(const Dataset& dataset, const std::vector<int>& widths) {
  int total = 0;
  for (const int w : widths) {
    if (w < 1) throw InputError("--groups entries must be positive");
    total += w;
  }
  int have = 0;
  for (int j = 0; j < dataset.d(); ++j) have += static_cast<int>(dataset.group(j).cols());
  if (total != have)
    throw InputError("--groups widths sum to " + std::to_string(total) + ", file has " +
                     std::to_string(have) + " columns");
  // Flatten all columns in file order, then re-slice.
  Matrix flat(dataset.n(), have);
  int c = 0;
  for (int j = 0; j < dataset.d(); ++j)
    for (int k = 0; k < dataset.group(j).cols(); ++k) flat.col(c++) = dataset.group(j).col(k);
  std::vector<Matrix> groups;
  int start = 0;
  for (const int w : widths) {
    groups.push_back(flat.middleCols(start, w));
    start += w;
  }
  return Dataset(std::move(groups));
}

std::vector<KernelSpec> kernels_from_flag(const std::string& bandwidth, int d) {
  std::vector<KernelSpec> specs(static_cast<std::size_t>(d), KernelSpec::gaussian());
  if (bandwidth == "median") return specs;
  std::vector<double> values;
  std::stringstream ss(bandwidth);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(tok, &pos);
      if (pos != tok.size() || !(v > 0)) throw std::invalid_argument("bad");
      values.push_back(v);
    } catch (const std::exception&) {
      throw InputError("--bandwidth must be 'median' or a comma list of positive numbers");
    }
  }
  if (static_cast<int>(values.size()) != d)
    throw InputError("--bandwidth needs one value per group (" + std::to_string(d) + ")");
  for (int j = 0; j < d; ++j) specs[static_cast<std::size_t>(j)].bandwidth =
      values[static_cast<std::size_t>(j)];
  return specs;
}

void print_outcome(const TestOutcome& outcome, bool unsafe_internals) {
  std::printf("%s\n", outcome.reject ? "REJECT" : "ACCEPT");
  if (unsafe_internals)
    std::printf("p_dp=%.10g m0=%.10g noise_scale=%.10g [NOT differentially private]\n",
                outcome.dp_p_value, outcome.m0, outcome.noise_scale);
}

// ---------------------------------------------------------------------------
// Subcommand state
// ---------------------------------------------------------------------------

struct TestArgs {
  std::string data;
  std::vector<int> groups;
  std::string test = "dpdhsic";
  double epsilon = 0.0;
  double delta = 0.0;
  double alpha = 0.05;
  int B = 200;
  std::uint64_t seed = 0;
  std::string bandwidth = "median";
  bool unsafe_internals = false;
};

struct SimulateArgs {
  std::string config;
  std::string out;
  int threads = 1;
  bool no_timing = false;
};

struct DagArgs {
  std::string data;
  std::string dag;
  double epsilon = 0.0;
  double delta = 0.0;
  double alpha = 0.05;
  int B = 200;
  std::uint64_t seed = 0;
  int reps = 1;
  std::string bandwidth = "median";
  bool unsafe_internals = false;
};

struct AuditArgs {
  std::string mode;
  int d = 2;
  int n = 20;
  std::string kernel = "gaussian";
  long draws = 0;
  double epsilon = 1.0;
  double delta = 0.0;
  double alpha = 0.05;
  int B = 20;
  std::uint64_t seed = 0;
  std::string test = "dpdhsic";
};

struct GenArgs {
  std::string generator = "null-gaussian";
  int n = 300;
  int d = 3;
  double sigma = 1.0;
  double rho = 0.3;
  int k_groups = 0;
  double v = 0.1;
  double gap = 2.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;
  std::string emit = "csv";
  std::string out;
};

int run_test_cmd(const TestArgs& args) {
  Dataset dataset = read_dataset_csv(args.data);
  if (!args.groups.empty()) dataset = regroup(dataset, args.groups);
  const auto specs = kernels_from_flag(args.bandwidth, dataset.d());
  TestParams params;
  params.id = args.test;
  params.epsilon = args.epsilon;
  params.delta = args.delta;
  params.alpha = args.alpha;
  params.B = args.B;
  Rng rng(args.seed);
  const auto outcome = run_named_test(params, dataset, specs, rng);
  print_outcome(outcome, args.unsafe_internals);
  return 0;
}

int run_simulate_cmd(const SimulateArgs& args) {
  std::ifstream in(args.config);
  if (!in) throw IoError("cannot open '" + args.config + "' for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto spec = parse_experiment_json(buffer.str());
  RunOptions options;
  options.threads = args.threads;
  options.record_timing = !args.no_timing;
  const auto rows = run_experiment(spec, args.out, options);
  std::printf("wrote %zu rows to %s\n", rows.size(), args.out.c_str());
  return 0;
}

int run_dag_cmd(const DagArgs& args) {
  const Dataset dataset = read_dataset_csv(args.data);
  const Dag dag = parse_dag_file(args.dag);
  const auto specs = kernels_from_flag(args.bandwidth, dataset.d());
  const PrivacyParams privacy(args.epsilon, args.delta);
  const TestConfig config(args.alpha, args.B, args.seed);
  if (args.reps < 1) throw InputError("--reps must be >= 1");
  Rng root(args.seed);
  if (args.reps == 1) {
    Rng rng = root.fork(0);
    const auto outcome = check_dag(dataset, dag, specs, privacy, config, rng);
    print_outcome(outcome, args.unsafe_internals);
    return 0;
  }
  long rejections = 0;
  for (int r = 0; r < args.reps; ++r) {
    Rng rng = root.fork(static_cast<std::uint64_t>(r));
    if (check_dag(dataset, dag, specs, privacy, config, rng).reject) ++rejections;
  }
  const auto [lo, hi] = wilson_interval(rejections, args.reps);
  std::printf("rejection_rate=%.10g ci_lo=%.10g ci_hi=%.10g reps=%d\n",
              static_cast<double>(rejections) / args.reps, lo, hi, args.reps);
  return 0;
}

int run_audit_cmd(const AuditArgs& args) {
  if (args.draws < 1) throw InputError("--draws must be >= 1");
  Rng root(args.seed);
  if (args.mode == "sensitivity") {
    // Random neighbor pairs x / x' (one row replaced), 20 shared permutations
    // each; the observed statistic gap must stay below the calibrated bound.
    KernelSpec spec =
        args.kernel == "laplacian" ? KernelSpec::laplacian(1.0) : KernelSpec::gaussian(1.0);
    const std::vector<KernelSpec> specs(static_cast<std::size_t>(args.d), spec);
    const double bound = v_sensitivity(args.d, product_bound(specs), args.n).delta_t;
    double observed = 0.0;
    for (long trial = 0; trial < args.draws; ++trial) {
      Rng t = root.fork(static_cast<std::uint64_t>(trial));
      Rng data_rng = t.fork(0);
      const Dataset x = gen_null_gaussian(args.n, args.d, data_rng);
      Rng row_rng = t.fork(1);
      const int row = static_cast<int>(row_rng.below(static_cast<std::uint32_t>(args.n)));
      std::vector<Matrix> groups;
      for (int j = 0; j < args.d; ++j) {
        Matrix g = x.group(j);
        for (int k = 0; k < g.cols(); ++k) g(row, k) = row_rng.normal();
        groups.push_back(std::move(g));
      }
      const Dataset xp(std::move(groups));
      const auto gx = gram_all(x, specs);
      const auto gxp = gram_all(xp, specs);
      Rng perm_rng = t.fork(2);
      for (int p = 0; p < 20; ++p) {
        Rng pr = perm_rng.fork(static_cast<std::uint64_t>(p));
        const Resampler res = draw_permutation(args.n, args.d, pr);
        const double ta = std::sqrt(std::max(v_stat_squared_resampled(gx, res), 0.0));
        const double tb = std::sqrt(std::max(v_stat_squared_resampled(gxp, res), 0.0));
        observed = std::max(observed, std::abs(ta - tb));
      }
    }
    const bool ok = observed <= bound;
    std::printf("mode=sensitivity observed_max=%.10g bound=%.10g pairs=%ld %s\n", observed,
                bound, args.draws, ok ? "ok" : "VIOLATION");
    return ok ? 0 : 1;
  }
  if (args.mode == "epsilon") {
    const auto pair = worst_case_neighbor_pair(args.n, 8.0);
    TestParams params;
    params.id = args.test;
    params.epsilon = args.epsilon;
    params.delta = args.delta;
    params.alpha = args.alpha;
    params.B = args.B;
    const auto mechanism = [&](const Dataset& data, Rng& rng) {
      const std::vector<KernelSpec> specs(static_cast<std::size_t>(data.d()),
                                          KernelSpec::gaussian(1.0));
      return run_named_test(params, data, specs, rng).reject;
    };
    Rng rng = root.fork(0);
    const auto report =
        audit_epsilon(mechanism, pair.first, pair.second, args.draws, args.delta, rng);
    std::printf("mode=epsilon test=%s estimate=%.10g upper=%.10g epsilon=%.10g draws=%ld%s\n",
                args.test.c_str(), report.estimate, report.upper, args.epsilon, report.draws,
                report.unbounded ? " (unbounded)" : "");
    return 0;
  }
  throw InputError("--mode must be sensitivity or epsilon");
}

int run_gen_cmd(const GenArgs& args) {
  if (args.emit != "csv") throw InputError("--emit supports only csv");
  GeneratorParams gen;
  gen.id = args.generator;
  gen.n = args.n;
  gen.d = args.d;
  gen.sigma = args.sigma;
  gen.rho = args.rho;
  gen.k_groups = args.k_groups;
  gen.v = args.v;
  gen.gap = args.gap;
  gen.noise_sd = args.noise_sd;
  Rng rng(args.seed);
  const Dataset dataset = generate_dataset(gen, rng);
  write_dataset_csv(dataset, args.out);
  std::printf("wrote %d rows x %d groups to %s\n", dataset.n(), dataset.d(), args.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private joint independence testing"};
  app.require_subcommand(1);

  TestArgs test_args;
  auto* cmd_test = app.add_subcommand("test", "Run one DP independence test on a CSV dataset");
  cmd_test->add_option("--data", test_args.data, "Dataset CSV (header g<j>_<k>)")->required();
  cmd_test->add_option("--groups", test_args.groups,
                       "Column widths per group, overriding the header grouping")
      ->delimiter(',');
  cmd_test->add_option("--test", test_args.test,
                       "dpdhsic|dpdhsic-u|dp-bootstrap|mdphsic|tot|sar");
  cmd_test->add_option("--epsilon", test_args.epsilon, "Privacy budget epsilon")->required();
  cmd_test->add_option("--delta", test_args.delta, "Privacy budget delta");
  cmd_test->add_option("--alpha", test_args.alpha, "Test level");
  cmd_test->add_option("--B", test_args.B, "Resample count");
  cmd_test->add_option("--seed", test_args.seed, "RNG seed");
  cmd_test->add_option("--bandwidth", test_args.bandwidth,
                       "'median' or comma list of per-group bandwidths");
  cmd_test->add_flag("--unsafe-internals", test_args.unsafe_internals,
                     "Also print non-DP diagnostics");

  SimulateArgs sim_args;
  auto* cmd_sim = app.add_subcommand("simulate", "Run a Monte Carlo experiment from JSON");
  cmd_sim->add_option("--config", sim_args.config, "Experiment JSON")->required();
  cmd_sim->add_option("--out", sim_args.out, "Results CSV path (appends/resumes)")->required();
  cmd_sim->add_option("--threads", sim_args.threads, "Worker threads per grid cell");
  cmd_sim->add_flag("--no-timing", sim_args.no_timing,
                    "Zero the seconds column (byte-stable output)");

  DagArgs dag_args;
  auto* cmd_dag = app.add_subcommand("dag-check", "Residual-independence DAG diagnostic");
  cmd_dag->add_option("--data", dag_args.data, "Dataset CSV (scalar groups)")->required();
  cmd_dag->add_option("--dag", dag_args.dag, "DAG file: one 'j: parents...' line per node")
      ->required();
  cmd_dag->add_option("--epsilon", dag_args.epsilon, "Privacy budget epsilon")->required();
  cmd_dag->add_option("--delta", dag_args.delta, "Privacy budget delta");
  cmd_dag->add_option("--alpha", dag_args.alpha, "Test level");
  cmd_dag->add_option("--B", dag_args.B, "Resample count");
  cmd_dag->add_option("--seed", dag_args.seed, "RNG seed");
  cmd_dag->add_option("--reps", dag_args.reps,
                      "Repetitions; >1 reports the rejection rate over test randomness");
  cmd_dag->add_option("--bandwidth", dag_args.bandwidth,
                      "'median' or comma list of per-group bandwidths");
  cmd_dag->add_flag("--unsafe-internals", dag_args.unsafe_internals,
                    "Also print non-DP diagnostics");

  AuditArgs audit_args;
  auto* cmd_audit = app.add_subcommand("audit", "Empirical sensitivity / privacy-loss checks");
  cmd_audit->add_option("--mode", audit_args.mode, "sensitivity|epsilon")->required();
  cmd_audit->add_option("--d", audit_args.d, "Group count (sensitivity mode)");
  cmd_audit->add_option("--n", audit_args.n, "Observations");
  cmd_audit->add_option("--kernel", audit_args.kernel, "gaussian|laplacian (sensitivity mode)");
  cmd_audit->add_option("--draws", audit_args.draws, "Neighbor pairs / mechanism draws")
      ->required();
  cmd_audit->add_option("--epsilon", audit_args.epsilon, "Privacy budget epsilon");
  cmd_audit->add_option("--delta", audit_args.delta, "Privacy budget delta");
  cmd_audit->add_option("--alpha", audit_args.alpha, "Test level (epsilon mode)");
  cmd_audit->add_option("--B", audit_args.B, "Resample count (epsilon mode)");
  cmd_audit->add_option("--seed", audit_args.seed, "RNG seed");
  cmd_audit->add_option("--test", audit_args.test, "Mechanism under audit (epsilon mode)");

  GenArgs gen_args;
  auto* cmd_gen = app.add_subcommand("gen", "Emit a synthetic dataset as CSV");
  cmd_gen->add_option("--generator", gen_args.generator,
                      "null-gaussian|product|toeplitz|two-atom|sem-chain");
  cmd_gen->add_option("--n", gen_args.n, "Observations");
  cmd_gen->add_option("--d", gen_args.d, "Group count");
  cmd_gen->add_option("--sigma", gen_args.sigma, "Noise sd (product)");
  cmd_gen->add_option("--rho", gen_args.rho, "Toeplitz correlation");
  cmd_gen->add_option("--k-groups", gen_args.k_groups, "Random regrouping count (toeplitz)");
  cmd_gen->add_option("--v", gen_args.v, "Two-atom dependence strength");
  cmd_gen->add_option("--gap", gen_args.gap, "Two-atom gap");
  cmd_gen->add_option("--noise-sd", gen_args.noise_sd, "SEM noise sd");
  cmd_gen->add_option("--seed", gen_args.seed, "RNG seed");
  cmd_gen->add_option("--emit", gen_args.emit, "Output format (csv)");
  cmd_gen->add_option("--out", gen_args.out, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(cmd_test)) return run_test_cmd(test_args);
    if (app.got_subcommand(cmd_sim)) return run_simulate_cmd(sim_args);
    if (app.got_subcommand(cmd_dag)) return run_dag_cmd(dag_args);
    if (app.got_subcommand(cmd_audit)) return run_audit_cmd(audit_args);
    if (app.got_subcommand(cmd_gen)) return run_gen_cmd(gen_args);
  } catch (const TooLarge& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const DegenerateBandwidth& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const DeltaOverflow& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
