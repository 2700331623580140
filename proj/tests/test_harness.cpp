#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "dpdhsic/harness.hpp"

using namespace dpdhsic;

namespace {

const char* const kValidConfig = R"({
  "generator": {"id": "product", "n": 40, "sigma": 0.5},
  "tests": [
    {"id": "dpdhsic", "epsilon": 1.0, "B": 19},
    {"id": "tot", "epsilon": 2.0, "alpha": 0.04, "delta": 0.001, "B": 9}
  ],
  "replications": 7,
  "seed": 42,
  "grid": [
    {"param": "n", "values": [20, 30]},
    {"param": "epsilon", "values": [0.5]}
  ]
})";

void expect_parse_error(const std::string& text, const std::string& needle) {
  try {
    parse_experiment_json(text);
    FAIL_CHECK("expected ParseError mentioning '" << needle << "'");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

std::string unique_tmp_csv(const char* tag) {
  return "/tmp/dpdhsic_" + std::string(tag) + "_" + std::to_string(::getpid()) + ".csv";
}

std::vector<std::string> formatted(const std::vector<ResultRow>& rows) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(format_result_row(row));
  return out;
}

}  // namespace

TEST_CASE("experiment json parses every recognized field") {
  const ExperimentSpec spec = parse_experiment_json(kValidConfig);
  CHECK(spec.generator.id == "product");
  CHECK(spec.generator.n == 40);
  CHECK(spec.generator.sigma == 0.5);
  REQUIRE(spec.tests.size() == 2);
  CHECK(spec.tests[0].id == "dpdhsic");
  CHECK(spec.tests[0].epsilon == 1.0);
  CHECK(spec.tests[0].B == 19);
  CHECK(spec.tests[0].alpha == 0.05);  // default preserved
  CHECK(spec.tests[1].id == "tot");
  CHECK(spec.tests[1].alpha == 0.04);
  CHECK(spec.tests[1].delta == 0.001);
  CHECK(spec.replications == 7);
  CHECK(spec.seed == 42);
  REQUIRE(spec.grid.size() == 2);
  CHECK(spec.grid[0].param == "n");
  CHECK(spec.grid[0].values == std::vector<double>{20.0, 30.0});
  CHECK(spec.grid[1].param == "epsilon");
}

TEST_CASE("experiment json errors name the offending location") {
  expect_parse_error("{not json", "invalid JSON");
  expect_parse_error(R"({"tests": [], "grid": []})", "/generator");
  expect_parse_error(R"({"generator": {"id": "product"}, "grid": [{"param": "n", "values": [10]}]})",
                     "/tests");
  expect_parse_error(R"({"generator": {}, "tests": [{"id": "dpdhsic"}],
                         "grid": [{"param": "n", "values": [10]}]})",
                     "/generator/id");
  expect_parse_error(R"({"generator": {"id": "product", "bogus": 1},
                         "tests": [{"id": "dpdhsic"}],
                         "grid": [{"param": "n", "values": [10]}]})",
                     "/generator/bogus");
  expect_parse_error(R"({"generator": {"id": "product"},
                         "tests": [{"id": "dpdhsic", "extra": true}],
                         "grid": [{"param": "n", "values": [10]}]})",
                     "/tests/0/extra");
  expect_parse_error(R"({"generator": {"id": "product"}, "tests": [{"id": "dpdhsic"}]})",
                     "/grid");
  expect_parse_error(R"({"generator": {"id": "product"}, "tests": [{"id": "dpdhsic"}],
                         "grid": []})",
                     "/grid");
  expect_parse_error(R"({"generator": {"id": "product"}, "tests": [{"id": "dpdhsic"}],
                         "grid": [{"param": "n", "values": []}]})",
                     "/grid/0/values");
  expect_parse_error(R"({"generator": {"id": "product"}, "tests": [{"id": "dpdhsic"}],
                         "grid": [{"param": "n", "values": [10, "x"]}]})",
                     "/grid/0/values/1");
  expect_parse_error(R"({"generator": {"id": "product"}, "tests": [{"id": "dpdhsic"}],
                         "seed": -3,
                         "grid": [{"param": "n", "values": [10]}]})",
                     "/seed");
  expect_parse_error(R"({"generator": {"id": "product"}, "tests": [{"id": "dpdhsic"}],
                         "typo": 1,
                         "grid": [{"param": "n", "values": [10]}]})",
                     "/typo");
}

TEST_CASE("named dispatch rejects unknown generators and tests") {
  GeneratorParams gen;
  gen.id = "no-such-generator";
  Rng rng(501);
  CHECK_THROWS_AS(generate_dataset(gen, rng), InputError);

  TestParams test;
  test.id = "no-such-test";
  GeneratorParams null_gen;
  null_gen.id = "null-gaussian";
  null_gen.n = 10;
  null_gen.d = 2;
  Rng data_rng(502);
  const Dataset data = generate_dataset(null_gen, data_rng);
  const std::vector<KernelSpec> specs(2, KernelSpec::gaussian());
  Rng test_rng(503);
  CHECK_THROWS_AS(run_named_test(test, data, specs, test_rng), InputError);
}

TEST_CASE("rejection rate rows are identical for any thread count") {
  GeneratorParams gen;
  gen.id = "product";
  gen.n = 24;
  gen.sigma = 1.0;
  TestParams test;
  test.id = "dpdhsic";
  test.epsilon = 1.0;
  test.B = 9;

  RunOptions serial;
  serial.threads = 1;
  serial.record_timing = false;
  RunOptions parallel;
  parallel.threads = 3;
  parallel.record_timing = false;

  Rng rng_a(504);
  const ResultRow a = estimate_rejection_rate(gen, test, 11, rng_a, serial);
  Rng rng_b(504);
  const ResultRow b = estimate_rejection_rate(gen, test, 11, rng_b, parallel);
  CHECK(format_result_row(a) == format_result_row(b));
  CHECK(a.reps == 11);
  CHECK(a.ci_lo <= a.reject_rate);
  CHECK(a.reject_rate <= a.ci_hi);
  CHECK(a.seconds == 0.0);

  RunOptions timed;
  Rng rng_c(504);
  const ResultRow c = estimate_rejection_rate(gen, test, 11, rng_c, timed);
  CHECK(c.seconds > 0.0);
  CHECK(c.reject_rate == a.reject_rate);

  Rng rng_d(504);
  CHECK_THROWS_AS(estimate_rejection_rate(gen, test, 0, rng_d, serial), InputError);
}

TEST_CASE("experiments resume from their csv without recomputing or drifting") {
  const ExperimentSpec spec = parse_experiment_json(R"({
    "generator": {"id": "null-gaussian", "n": 24, "d": 2},
    "tests": [{"id": "dpdhsic", "epsilon": 1.0, "B": 9}],
    "replications": 5,
    "seed": 7,
    "grid": [
      {"param": "n", "values": [16, 24]},
      {"param": "epsilon", "values": [0.5, 2.0]}
    ]
  })");
  RunOptions options;
  options.record_timing = false;

  const std::string path = unique_tmp_csv("resume");
  std::remove(path.c_str());
  const auto rows = run_experiment(spec, path, options);
  REQUIRE(rows.size() == 4);  // (2 + 2 grid cells) x 1 test
  const auto baseline = formatted(rows);

  // A second run resumes every cell from the file.
  const auto resumed = formatted(run_experiment(spec, path, options));
  CHECK(resumed == baseline);
  CHECK(read_results_csv(path).size() == 4);  // no duplicate rows appended

  // A truncated file resumes the finished cells and recomputes the rest,
  // landing on the same rows because cell streams are positional.
  std::ofstream trunc(path, std::ios::trunc);
  trunc << results_csv_header() << '\n' << baseline[0] << '\n' << baseline[1] << '\n';
  trunc.close();
  const auto recovered = formatted(run_experiment(spec, path, options));
  CHECK(recovered == baseline);
  CHECK(read_results_csv(path).size() == 4);

  std::remove(path.c_str());
}

TEST_CASE("experiment validation rejects empty plans and bad paths") {
  ExperimentSpec spec = parse_experiment_json(R"({
    "generator": {"id": "null-gaussian", "n": 16, "d": 2},
    "tests": [{"id": "dpdhsic", "B": 9}],
    "replications": 2,
    "grid": [{"param": "n", "values": [16]}]
  })");
  RunOptions options;
  options.record_timing = false;

  ExperimentSpec no_grid = spec;
  no_grid.grid.clear();
  CHECK_THROWS_AS(run_experiment(no_grid, unique_tmp_csv("nogrid"), options), InputError);

  ExperimentSpec no_tests = spec;
  no_tests.tests.clear();
  CHECK_THROWS_AS(run_experiment(no_tests, unique_tmp_csv("notests"), options), InputError);

  ExperimentSpec bad_param = spec;
  bad_param.grid[0].param = "volume";
  const std::string bad_param_path = unique_tmp_csv("badparam");
  CHECK_THROWS_AS(run_experiment(bad_param, bad_param_path, options), InputError);
  std::remove(bad_param_path.c_str());

  CHECK_THROWS_AS(run_experiment(spec, "/nonexistent/dir/out.csv", options), IoError);
}

TEST_CASE("results csv round-trips and rejects foreign schemas") {
  ResultRow row;
  row.param_name = "epsilon";
  row.param_value = 0.5;
  row.test = "mdphsic";
  row.n = 128;
  row.d = 4;
  row.epsilon = 0.5;
  row.delta = 1e-6;
  row.alpha = 0.05;
  row.B = 199;
  row.reps = 500;
  row.reject_rate = 0.262;
  row.ci_lo = 0.225;
  row.ci_hi = 0.303;
  row.seconds = 12.75;

  const std::string path = unique_tmp_csv("roundtrip");
  write_results_csv({row}, path);
  const auto rows = read_results_csv(path);
  REQUIRE(rows.size() == 1);
  CHECK(format_result_row(rows[0]) == format_result_row(row));
  std::remove(path.c_str());

  const std::string bad = unique_tmp_csv("badheader");
  std::ofstream out(bad);
  out << "a,b,c\n";
  out.close();
  CHECK_THROWS_AS(read_results_csv(bad), ParseError);
  std::remove(bad.c_str());

  CHECK_THROWS_AS(read_results_csv("/nonexistent/dir/results.csv"), IoError);
  CHECK_THROWS_AS(write_results_csv({row}, "/nonexistent/dir/results.csv"), IoError);
}
