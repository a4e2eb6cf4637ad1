#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "crf/dataset.hpp"
#include "crf/simulation.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace crf;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(CRF_CLI_PATH) + " " + args + " >cli_stdout.txt 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct TempData {
  std::string path = "cli_data.csv";
  TempData() {
    auto data = generate(DgpSpec::preset(DgpId::kShiftEquicorr, 60, 31));
    save_dataset(data.ds, path);
  }
  ~TempData() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("train, predict and ci round trip through files") {
  TempData data;
  REQUIRE(run_cli("train --data " + data.path +
                  " --out cli_model.json --B 6 --R 2 --beta 0.7 --k 5"
                  " --weight-class equicorrelated --rho-strategy q_shift"
                  " --shift point:0.4 --seed 7") == 0);

  {
    std::ofstream q("cli_query.csv");
    q << "x1\n-0.5\n0.4\n";
  }
  REQUIRE(run_cli("predict --model cli_model.json --query cli_query.csv"
                  " --out cli_pred.csv") == 0);
  std::string pred = slurp("cli_pred.csv");
  CHECK(pred.find("mu_hat") != std::string::npos);

  REQUIRE(run_cli("ci --model cli_model.json --query cli_query.csv"
                  " --out cli_ci.csv --alpha-ci 0.1") == 0);
  std::string ci = slurp("cli_ci.csv");
  CHECK(ci.find("v_hat,lo,hi") != std::string::npos);

  // running predict twice gives identical bytes
  REQUIRE(run_cli("predict --model cli_model.json --query cli_query.csv"
                  " --out cli_pred2.csv") == 0);
  CHECK(slurp("cli_pred2.csv") == pred);

  for (const char* f : {"cli_model.json", "cli_query.csv", "cli_pred.csv",
                        "cli_pred2.csv", "cli_ci.csv", "cli_stdout.txt"})
    std::remove(f);
}

TEST_CASE("simulate emits a JSON report") {
  REQUIRE(run_cli("simulate --dgp ar2_inference:40 --reps 2 --B 6 --R 2"
                  " --beta 0.7 --weight-class ar1 --rho-strategy q_shift"
                  " --target 1.0 --out cli_sim.json --seed 3") == 0);
  auto j = nlohmann::json::parse(slurp("cli_sim.json"));
  CHECK(j["reps"] == 2);
  CHECK(j["methods"].size() >= 2);
  std::remove("cli_sim.json");
  std::remove("cli_sim.json.reps.csv");
  std::remove("cli_stdout.txt");
}

TEST_CASE("exit codes distinguish usage and runtime failures") {
  CHECK(run_cli("train") == 2);                       // missing --data
  CHECK(run_cli("no_such_command") == 2);             // bad subcommand
  CHECK(run_cli("train --data missing_file.csv --out m.json --seed 1") == 1);
  TempData data;
  CHECK(run_cli("train --data " + data.path +
                " --out m.json --seed 1 --rho-strategy moment --rho-fixed 0.2") == 2);
  std::remove("cli_stdout.txt");
  std::remove("m.json");
}

}  // TEST_SUITE
