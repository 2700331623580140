#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dpdhsic/dag.hpp"
#include "dpdhsic/harness.hpp"

namespace {

struct CliResult {
  int status = -1;
  std::string output;  // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(CLI_BINARY) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult result;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) result.output.append(buf, got);
  const int rc = ::pclose(pipe);
  result.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return result;
}

std::string tmp_path(const char* tag, const char* ext) {
  return "/tmp/dpdhsic_cli_" + std::string(tag) + "_" + std::to_string(::getpid()) + ext;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("help succeeds and unknown flags exit with code 2") {
  CHECK(run_cli("--help").status == 0);
  CHECK(run_cli("test --help").status == 0);
  CHECK(run_cli("--no-such-flag").status == 2);
  CHECK(run_cli("test --data x.csv").status == 2);   // --epsilon is required
  CHECK(run_cli("frobnicate").status == 2);          // unknown subcommand
  CHECK(run_cli("").status == 2);                    // a subcommand is required
}

TEST_CASE("generate-then-test round trip rejects planted dependence") {
  const std::string data = tmp_path("product", ".csv");
  const auto gen = run_cli("gen --generator product --n 500 --sigma 0 --seed 5 --out " + data);
  CHECK(gen.status == 0);
  CHECK(contains(gen.output, "wrote 500 rows x 3 groups"));

  const auto test = run_cli("test --data " + data + " --epsilon 1 --B 199 --seed 3");
  CHECK(test.status == 0);
  CHECK(contains(test.output, "REJECT"));

  // Identical command lines give byte-identical output, internals included.
  const std::string argv =
      "test --data " + data + " --epsilon 1 --B 199 --seed 3 --unsafe-internals";
  const auto first = run_cli(argv);
  const auto second = run_cli(argv);
  CHECK(first.status == 0);
  CHECK(first.output == second.output);
  CHECK(contains(first.output, "p_dp="));
  CHECK(contains(first.output, "[NOT differentially private]"));

  // The default output stays clean of diagnostics.
  CHECK_FALSE(contains(test.output, "p_dp="));
  std::remove(data.c_str());
}

TEST_CASE("constant dataset accepts under an explicit bandwidth") {
  const std::string data = tmp_path("constant", ".csv");
  {
    std::ofstream out(data);
    out << "g0_0,g1_0\n";
    for (int i = 0; i < 12; ++i) out << "1,2\n";
  }
  // The median heuristic has no positive pairwise distance to work with.
  const auto degenerate = run_cli("test --data " + data + " --epsilon 1 --seed 1");
  CHECK(degenerate.status == 2);
  CHECK(contains(degenerate.output, "error:"));

  const auto ok =
      run_cli("test --data " + data + " --epsilon 1 --B 99 --seed 1 --bandwidth 1,1");
  CHECK(ok.status == 0);
  CHECK(contains(ok.output, "ACCEPT"));
  std::remove(data.c_str());
}

TEST_CASE("column regrouping overrides the header grouping") {
  const std::string data = tmp_path("regroup", ".csv");
  REQUIRE(run_cli("gen --generator null-gaussian --n 40 --d 4 --seed 7 --out " + data).status ==
          0);
  const auto ok = run_cli("test --data " + data +
                          " --groups 2,2 --test dpdhsic-u --epsilon 2 --B 49 --seed 2");
  CHECK(ok.status == 0);

  const auto mismatch = run_cli("test --data " + data + " --groups 3,2 --epsilon 1 --seed 2");
  CHECK(mismatch.status == 2);
  CHECK(contains(mismatch.output, "--groups"));
  std::remove(data.c_str());
}

TEST_CASE("oversized exact-enumeration requests name the supported maximum") {
  const std::string data = tmp_path("toobig", ".csv");
  REQUIRE(run_cli("gen --generator null-gaussian --n 200 --d 2 --seed 8 --out " + data).status ==
          0);
  const auto result =
      run_cli("test --data " + data + " --test dpdhsic-u --epsilon 1 --seed 1");
  CHECK(result.status == 4);
  CHECK(contains(result.output, "maximum n"));
  CHECK(contains(result.output, "100"));
  std::remove(data.c_str());
}

TEST_CASE("missing input files exit with code 3") {
  CHECK(run_cli("test --data /nonexistent/x.csv --epsilon 1").status == 3);
  CHECK(run_cli("simulate --config /nonexistent/c.json --out /tmp/unused_out.csv").status == 3);
  CHECK(run_cli("dag-check --data /nonexistent/x.csv --dag /nonexistent/g.txt --epsilon 1")
            .status == 3);
}

TEST_CASE("simulate runs, resumes, and is thread-count invariant") {
  const std::string config = tmp_path("simcfg", ".json");
  {
    std::ofstream out(config);
    out << R"({
      "generator": {"id": "null-gaussian", "n": 24, "d": 2},
      "tests": [
        {"id": "dpdhsic", "epsilon": 1.0, "B": 19},
        {"id": "sar", "epsilon": 1.0, "B": 19}
      ],
      "replications": 3,
      "seed": 9,
      "grid": [{"param": "n", "values": [16, 24]}]
    })";
  }
  const std::string out_a = tmp_path("sim_a", ".csv");
  const std::string out_b = tmp_path("sim_b", ".csv");
  std::remove(out_a.c_str());
  std::remove(out_b.c_str());

  const auto serial =
      run_cli("simulate --config " + config + " --out " + out_a + " --no-timing");
  CHECK(serial.status == 0);
  CHECK(contains(serial.output, "wrote 4 rows"));

  const auto parallel = run_cli("simulate --config " + config + " --out " + out_b +
                                " --threads 3 --no-timing");
  CHECK(parallel.status == 0);
  CHECK(slurp(out_a) == slurp(out_b));

  // Rerunning resumes every cell and appends nothing.
  const std::string before = slurp(out_a);
  const auto resumed =
      run_cli("simulate --config " + config + " --out " + out_a + " --no-timing");
  CHECK(resumed.status == 0);
  CHECK(contains(resumed.output, "wrote 4 rows"));
  CHECK(slurp(out_a) == before);

  std::remove(config.c_str());
  std::remove(out_a.c_str());
  std::remove(out_b.c_str());
}

TEST_CASE("simulate rejects malformed configs with a pointer path") {
  const std::string config = tmp_path("badcfg", ".json");
  {
    std::ofstream out(config);
    out << R"({"generator": {"id": "null-gaussian"}, "tests": [{"id": "dpdhsic"}]})";
  }
  const auto missing_grid =
      run_cli("simulate --config " + config + " --out /tmp/unused_out.csv");
  CHECK(missing_grid.status == 2);
  CHECK(contains(missing_grid.output, "/grid"));

  {
    std::ofstream out(config);
    out << "{not json";
  }
  const auto invalid = run_cli("simulate --config " + config + " --out /tmp/unused_out.csv");
  CHECK(invalid.status == 2);
  CHECK(contains(invalid.output, "invalid JSON"));
  std::remove(config.c_str());
}

TEST_CASE("dag-check tests residual independence against a graph file") {
  const std::string data = tmp_path("sem", ".csv");
  REQUIRE(run_cli("gen --generator sem-chain --n 120 --d 3 --noise-sd 1 --seed 11 --out " +
                  data)
              .status == 0);
  const std::string dag = std::string(CONFIG_DIR) + "/chain3.txt";

  const auto ok = run_cli("dag-check --data " + data + " --dag " + dag +
                          " --epsilon inf --B 99 --seed 4");
  CHECK(ok.status == 0);
  CHECK(contains(ok.output, "ACCEPT"));

  const auto rates = run_cli("dag-check --data " + data + " --dag " + dag +
                             " --epsilon inf --B 99 --seed 4 --reps 5");
  CHECK(rates.status == 0);
  CHECK(contains(rates.output, "rejection_rate="));
  CHECK(contains(rates.output, "reps=5"));

  const std::string cyclic = tmp_path("cyclic", ".txt");
  {
    std::ofstream out(cyclic);
    out << "0: 1\n1: 0\n2:\n";
  }
  const auto bad = run_cli("dag-check --data " + data + " --dag " + cyclic + " --epsilon 1");
  CHECK(bad.status == 2);
  CHECK(contains(bad.output, "cycle"));
  std::remove(cyclic.c_str());
  std::remove(data.c_str());
}

TEST_CASE("audit modes report their findings and validate draws") {
  const auto sens = run_cli("audit --mode sensitivity --d 2 --n 15 --draws 5 --seed 6");
  CHECK(sens.status == 0);
  CHECK(contains(sens.output, "mode=sensitivity"));
  CHECK(contains(sens.output, "pairs=5"));
  CHECK(contains(sens.output, " ok"));
  CHECK_FALSE(contains(sens.output, "VIOLATION"));

  const auto eps = run_cli(
      "audit --mode epsilon --test dpdhsic --n 20 --B 19 --epsilon 1 --draws 10000 --seed 6");
  CHECK(eps.status == 0);
  CHECK(contains(eps.output, "mode=epsilon test=dpdhsic"));
  CHECK(contains(eps.output, "estimate="));
  CHECK(contains(eps.output, "upper="));

  CHECK(run_cli("audit --mode epsilon --draws 0").status == 2);
  CHECK(run_cli("audit --mode nonsense --draws 10").status == 2);
}

TEST_CASE("bundled experiment configs parse with the documented shapes") {
  using dpdhsic::parse_experiment_json;
  const std::string dir = CONFIG_DIR;

  const auto sim1 = parse_experiment_json(slurp(dir + "/sim1.json"));
  REQUIRE(sim1.grid.size() == 1);
  CHECK(sim1.grid[0].param == "n");
  CHECK(sim1.grid[0].values.size() == 10);  // 10 table rows ...
  CHECK(sim1.tests.size() == 4);            // ... by 4 test columns
  CHECK(sim1.replications == 500);
  CHECK(sim1.generator.id == "null-gaussian");
  CHECK(sim1.generator.d == 3);

  const auto sim2 = parse_experiment_json(slurp(dir + "/sim2_eps.json"));
  REQUIRE(sim2.grid.size() == 1);
  CHECK(sim2.grid[0].param == "epsilon");
  CHECK(sim2.generator.id == "product");
  CHECK(sim2.generator.n == 1000);
  CHECK(sim2.tests.size() == 4);

  const dpdhsic::Dag chain = dpdhsic::parse_dag_file(dir + "/chain3.txt");
  CHECK(chain.d == 3);
  CHECK(chain.parents[0].empty());
  CHECK(chain.parents[1] == std::vector<int>{0});
  CHECK(chain.parents[2] == std::vector<int>{1});
}
