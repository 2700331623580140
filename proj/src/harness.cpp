#include "dpdhsic/harness.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <set>
#include <thread>
#include <utility>

#include <json.hpp>

#include "dpdhsic/competitors.hpp"
#include "dpdhsic/dpdhsic.hpp"
#include "dpdhsic/privacy.hpp"
#include "dpdhsic/simgen.hpp"
#include "str_format.hpp"

namespace dpdhsic {

using detail::format_double;
using detail::parse_double;
using detail::split_fields;
using detail::trim;

Dataset generate_dataset(const GeneratorParams& gen, Rng& rng) {
  if (gen.id == "null-gaussian") return gen_null_gaussian(gen.n, gen.d, rng);
  if (gen.id == "product") return gen_product_dependence(gen.n, gen.sigma, rng);
  if (gen.id == "toeplitz") {
    Dataset data = gen_toeplitz(gen.n, gen.d, gen.rho, rng);
    if (gen.k_groups >= 2) return group_random(data, gen.k_groups, rng);
    return data;
  }
  if (gen.id == "two-atom")
    return two_atom_family(gen.d, gen.v, gen.gap).sample(gen.n, rng);
  if (gen.id == "sem-chain") {
    EdgeFuncMap funcs;
    for (int j = 1; j < gen.d; ++j)
      funcs[{j, j - 1}] = EdgeFunc{j % 2 == 1 ? EdgeKind::Linear : EdgeKind::Tanh, 1.0};
    return gen_sem_dag(gen.n, Dag::chain(gen.d),
                       funcs, std::vector<double>(static_cast<std::size_t>(gen.d), gen.noise_sd),
                       rng);
  }
  throw InputError("unknown generator id '" + gen.id + "'");
}

TestOutcome run_named_test(const TestParams& test, const Dataset& dataset,
                           const std::vector<KernelSpec>& specs, Rng& rng) {
  const PrivacyParams privacy(test.epsilon, test.delta);
  const TestConfig config(test.alpha, test.B, 0);
  if (test.id == "dpdhsic") return dpdhsic_test(dataset, specs, privacy, config, rng);
  if (test.id == "dpdhsic-u") return dpdhsic_u_test(dataset, specs, privacy, config, rng);
  if (test.id == "dp-bootstrap")
    return dp_bootstrap_dhsic_test(dataset, specs, privacy, config, rng);
  if (test.id == "mdphsic") return mdphsic_test(dataset, specs, privacy, config, rng);
  if (test.id == "tot") return tot_dhsic_test(dataset, specs, privacy, config, rng);
  if (test.id == "sar") return sar_dhsic_test(dataset, specs, privacy, config, rng);
  throw InputError("unknown test id '" + test.id + "'");
}

namespace {

bool run_one_test(const TestParams& test, const Dataset& dataset, Rng& rng) {
  const std::vector<KernelSpec> specs(static_cast<std::size_t>(dataset.d()),
                                      KernelSpec::gaussian());
  return run_named_test(test, dataset, specs, rng).reject;
}

}  // namespace

ResultRow estimate_rejection_rate(const GeneratorParams& gen, const TestParams& test,
                                  int reps, Rng& rng, const RunOptions& options) {
  if (reps < 1) throw InputError("need at least one replication");
  const int threads = std::max(1, options.threads);
  const auto start = std::chrono::steady_clock::now();

  // Replicate r is a pure function of rng.fork(r): identical results for any
  // thread count.
  std::vector<char> rejected(static_cast<std::size_t>(reps), 0);
  auto worker = [&](int tid, std::exception_ptr& error) {
    try {
      for (int r = tid; r < reps; r += threads) {
        Rng rep = rng.fork(static_cast<std::uint64_t>(r));
        Rng data_rng = rep.fork(0);
        Rng test_rng = rep.fork(1);
        const Dataset dataset = generate_dataset(gen, data_rng);
        rejected[static_cast<std::size_t>(r)] = run_one_test(test, dataset, test_rng) ? 1 : 0;
      }
    } catch (...) {
      error = std::current_exception();
    }
  };
  if (threads == 1) {
    std::exception_ptr error;
    worker(0, error);
    if (error) std::rethrow_exception(error);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(worker, t, std::ref(errors[static_cast<std::size_t>(t)]));
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  long count = 0;
  for (const char c : rejected) count += c;
  const auto [lo, hi] = wilson_interval(count, reps);

  ResultRow row;
  row.test = test.id;
  row.n = gen.n;
  // d as tested: the product design is fixed at 3 groups and random grouping
  // reduces toeplitz scalars to k_groups blocks.
  row.d = gen.id == "product"
              ? 3
              : (gen.id == "toeplitz" && gen.k_groups >= 2 ? gen.k_groups : gen.d);
  row.epsilon = test.epsilon;
  row.delta = test.delta;
  row.alpha = test.alpha;
  row.B = test.B;
  row.reps = reps;
  row.reject_rate = static_cast<double>(count) / reps;
  row.ci_lo = lo;
  row.ci_hi = hi;
  if (options.record_timing) {
    const auto end = std::chrono::steady_clock::now();
    row.seconds = std::chrono::duration<double>(end - start).count();
  }
  return row;
}

std::string results_csv_header() {
  return "param_name,param_value,test,n,d,epsilon,delta,alpha,B,reps,reject_rate,"
         "ci_lo,ci_hi,seconds";
}

std::string format_result_row(const ResultRow& row) {
  std::string s;
  s += row.param_name;
  s += ',';
  s += format_double(row.param_value);
  s += ',';
  s += row.test;
  s += ',';
  s += std::to_string(row.n);
  s += ',';
  s += std::to_string(row.d);
  s += ',';
  s += format_double(row.epsilon);
  s += ',';
  s += format_double(row.delta);
  s += ',';
  s += format_double(row.alpha);
  s += ',';
  s += std::to_string(row.B);
  s += ',';
  s += std::to_string(row.reps);
  s += ',';
  s += format_double(row.reject_rate);
  s += ',';
  s += format_double(row.ci_lo);
  s += ',';
  s += format_double(row.ci_hi);
  s += ',';
  s += format_double(row.seconds);
  return s;
}

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << results_csv_header() << '\n';
  for (const auto& row : rows) out << format_result_row(row) << '\n';
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty results file", 1);
  {
    std::string header;
    for (const char c : line)
      if (c != '\r') header.push_back(c);
    if (header != results_csv_header())
      throw ParseError("results header does not match the expected schema", 1);
  }
  std::vector<ResultRow> rows;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 14)
      throw ParseError("expected 14 fields, got " + std::to_string(f.size()), line_number);
    ResultRow row;
    row.param_name = f[0];
    row.param_value = parse_double(f[1], line_number);
    row.test = f[2];
    row.n = static_cast<int>(parse_double(f[3], line_number));
    row.d = static_cast<int>(parse_double(f[4], line_number));
    row.epsilon = parse_double(f[5], line_number);
    row.delta = parse_double(f[6], line_number);
    row.alpha = parse_double(f[7], line_number);
    row.B = static_cast<int>(parse_double(f[8], line_number));
    row.reps = static_cast<int>(parse_double(f[9], line_number));
    row.reject_rate = parse_double(f[10], line_number);
    row.ci_lo = parse_double(f[11], line_number);
    row.ci_hi = parse_double(f[12], line_number);
    row.seconds = parse_double(f[13], line_number);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

struct Cell {
  std::string param;
  double value = 0.0;
  std::size_t sweep_index = 0;
  std::size_t value_index = 0;
};

void apply_override(const Cell& cell, GeneratorParams& gen, TestParams& test) {
  const auto as_int = [&](const char* what) {
    if (std::abs(cell.value - std::round(cell.value)) > 1e-9)
      throw InputError(std::string(what) + " sweep values must be integers");
    return static_cast<int>(std::llround(cell.value));
  };
  if (cell.param == "n")
    gen.n = as_int("n");
  else if (cell.param == "d")
    gen.d = as_int("d");
  else if (cell.param == "epsilon")
    test.epsilon = cell.value;
  else if (cell.param == "rho")
    gen.rho = cell.value;
  else if (cell.param == "sigma")
    gen.sigma = cell.value;
  else
    throw InputError("unknown sweep parameter '" + cell.param + "'");
}

std::string cell_key(const std::string& param, double value, const std::string& test) {
  return param + "|" + format_double(value) + "|" + test;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, const std::string& csv_path,
                                      const RunOptions& options) {
  if (spec.tests.empty()) throw InputError("experiment needs at least one test");
  if (spec.replications < 1) throw InputError("need at least one replication");

  if (spec.grid.empty()) throw InputError("experiment grid must not be empty");
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < spec.grid.size(); ++s) {
    const auto& sweep = spec.grid[s];
    if (sweep.values.empty())
      throw InputError("sweep over '" + sweep.param + "' has no values");
    for (std::size_t v = 0; v < sweep.values.size(); ++v)
      cells.push_back(Cell{sweep.param, sweep.values[v], s, v});
  }

  // Resume support: previously finished cells are read back, not recomputed.
  std::vector<ResultRow> existing;
  {
    std::ifstream probe(csv_path);
    if (probe.good()) existing = read_results_csv(csv_path);
  }
  std::set<std::string> done;
  for (const auto& row : existing)
    done.insert(cell_key(row.param_name, row.param_value, row.test));

  std::ofstream out(csv_path, std::ios::app);
  if (!out) throw IoError("cannot open '" + csv_path + "' for writing");
  if (existing.empty()) out << results_csv_header() << '\n';

  const Rng root(spec.seed);
  std::vector<ResultRow> rows;
  for (const auto& cell : cells) {
    for (std::size_t t = 0; t < spec.tests.size(); ++t) {
      const auto key = cell_key(cell.param, cell.value, spec.tests[t].id);
      if (done.count(key)) {
        for (const auto& row : existing)
          if (cell_key(row.param_name, row.param_value, row.test) == key) {
            rows.push_back(row);
            break;
          }
        continue;
      }
      GeneratorParams gen = spec.generator;
      TestParams test = spec.tests[t];
      apply_override(cell, gen, test);
      // The cell stream depends only on the grid position, never on which
      // cells were skipped.
      Rng cell_rng = root.fork(cell.sweep_index).fork(cell.value_index).fork(t);
      ResultRow row = estimate_rejection_rate(gen, test, spec.replications, cell_rng, options);
      row.param_name = cell.param;
      row.param_value = cell.value;
      out << format_result_row(row) << '\n';
      out.flush();
      if (!out) throw IoError("write to '" + csv_path + "' failed");
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

using nlohmann::json;

[[noreturn]] void bad_key(const std::string& path, const std::string& what) {
  throw ParseError(path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) bad_key(path, "expected an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key())) bad_key(path + "/" + item.key(), "unknown key");
}

double get_number(const json& obj, const std::string& path, const std::string& key,
                  double fallback, bool required = false) {
  if (!obj.contains(key)) {
    if (required) bad_key(path + "/" + key, "missing key");
    return fallback;
  }
  const auto& v = obj.at(key);
  if (!v.is_number()) bad_key(path + "/" + key, "expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& path, const std::string& key,
            int fallback, bool required = false) {
  const double v = get_number(obj, path, key, fallback, required);
  if (std::abs(v - std::round(v)) > 1e-9) bad_key(path + "/" + key, "expected an integer");
  return static_cast<int>(std::llround(v));
}

std::string get_string(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) bad_key(path + "/" + key, "missing key");
  const auto& v = obj.at(key);
  if (!v.is_string()) bad_key(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

}  // namespace

ExperimentSpec parse_experiment_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  check_keys(doc, "", {"generator", "tests", "replications", "grid", "seed"});

  ExperimentSpec spec;
  if (!doc.contains("generator")) bad_key("/generator", "missing key");
  {
    const auto& g = doc.at("generator");
    check_keys(g, "/generator",
               {"id", "n", "d", "sigma", "rho", "k_groups", "v", "gap", "noise_sd"});
    spec.generator.id = get_string(g, "/generator", "id");
    spec.generator.n = get_int(g, "/generator", "n", spec.generator.n);
    spec.generator.d = get_int(g, "/generator", "d", spec.generator.d);
    spec.generator.sigma = get_number(g, "/generator", "sigma", spec.generator.sigma);
    spec.generator.rho = get_number(g, "/generator", "rho", spec.generator.rho);
    spec.generator.k_groups = get_int(g, "/generator", "k_groups", spec.generator.k_groups);
    spec.generator.v = get_number(g, "/generator", "v", spec.generator.v);
    spec.generator.gap = get_number(g, "/generator", "gap", spec.generator.gap);
    spec.generator.noise_sd = get_number(g, "/generator", "noise_sd", spec.generator.noise_sd);
  }
  if (!doc.contains("tests")) bad_key("/tests", "missing key");
  {
    const auto& ts = doc.at("tests");
    if (!ts.is_array() || ts.empty()) bad_key("/tests", "expected a nonempty array");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string path = "/tests/" + std::to_string(i);
      const auto& t = ts.at(i);
      check_keys(t, path, {"id", "epsilon", "delta", "alpha", "B"});
      TestParams params;
      params.id = get_string(t, path, "id");
      params.epsilon = get_number(t, path, "epsilon", params.epsilon);
      params.delta = get_number(t, path, "delta", params.delta);
      params.alpha = get_number(t, path, "alpha", params.alpha);
      params.B = get_int(t, path, "B", params.B);
      spec.tests.push_back(std::move(params));
    }
  }
  spec.replications = get_int(doc, "", "replications", spec.replications);
  if (doc.contains("seed")) {
    const auto& s = doc.at("seed");
    if (!s.is_number_unsigned()) bad_key("/seed", "expected a nonnegative integer");
    spec.seed = s.get<std::uint64_t>();
  }
  if (!doc.contains("grid")) bad_key("/grid", "missing key");
  {
    const auto& grid = doc.at("grid");
    if (!grid.is_array() || grid.empty()) bad_key("/grid", "expected a nonempty array");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const std::string path = "/grid/" + std::to_string(i);
      const auto& sweep = grid.at(i);
      check_keys(sweep, path, {"param", "values"});
      GridSweep gs;
      gs.param = get_string(sweep, path, "param");
      if (!sweep.contains("values")) bad_key(path + "/values", "missing key");
      const auto& values = sweep.at("values");
      if (!values.is_array() || values.empty())
        bad_key(path + "/values", "expected a nonempty array");
      for (std::size_t v = 0; v < values.size(); ++v) {
        if (!values.at(v).is_number())
          bad_key(path + "/values/" + std::to_string(v), "expected a number");
        gs.values.push_back(values.at(v).get<double>());
      }
      spec.grid.push_back(std::move(gs));
    }
  }
  return spec;
}

}  // namespace dpdhsic
