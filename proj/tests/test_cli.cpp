#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "asep/cli.hpp"

using namespace asep;

namespace {

std::string tmp_path(const std::string& name) { return "/tmp/asep_cli_test_" + name; }

int run_cli(const std::string& args) {
#ifdef ASEP_CLI_PATH
  const int rc = std::system((std::string(ASEP_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
#else
  (void)args;
  return -1;
#endif
}

}  // namespace

TEST_CASE("config keys") {
  RunConfig cfg;
  apply_config_key(cfg, "model.p", "3/5");
  apply_config_key(cfg, "query.x", "-2..4");
  apply_config_key(cfg, "query.t", "0.3, 1.0");
  apply_config_key(cfg, "query.method", "thm1,thm2");
  CHECK(cfg.p == "3/5");
  CHECK(cfg.x_lo == -2);
  CHECK(cfg.x_hi == 4);
  CHECK(cfg.t == std::vector<double>{0.3, 1.0});
  CHECK(cfg.methods == std::vector<std::string>{"thm1", "thm2"});
  CHECK_THROWS_AS(apply_config_key(cfg, "query.unknown", "1"), config_error);
  CHECK_THROWS_AS(apply_config_key(cfg, "query.x", "5..3"), config_error);
  CHECK_THROWS_AS(apply_config_key(cfg, "query.m", "two"), config_error);
}

TEST_CASE("config file parsing") {
  const std::string path = tmp_path("config.cfg");
  {
    std::ofstream out(path);
    out << "# comment\n[model]\np = 7/10\ny = 0,2,5\n\n[query]\nx = 1..3\nm = 2\n"
        << "t = 0.5\nmethod = thm1\n[oracle]\nseed = 99\n";
  }
  RunConfig cfg;
  load_config_file(cfg, path);
  CHECK(cfg.p == "7/10");
  CHECK(cfg.y == "0,2,5");
  CHECK(cfg.m == 2);
  CHECK(cfg.seed == 99);
  {
    std::ofstream out(path);
    out << "[query]\nbogus = 1\n";
  }
  RunConfig cfg2;
  CHECK_THROWS_AS(load_config_file(cfg2, path), config_error);
  RunConfig cfg3;
  CHECK_THROWS_AS(load_config_file(cfg3, tmp_path("missing.cfg")), config_error);
}

TEST_CASE("particle parsing") {
  CHECK(parse_particles("step").step);
  CHECK(parse_particles("0,2,5").positions == std::vector<long>{0, 2, 5});
  CHECK_THROWS_AS(parse_particles("3,1"), config_error);
  CHECK_THROWS_AS(parse_particles(""), config_error);
}

TEST_CASE("config JSON round-trips exactly") {
  RunConfig cfg;
  cfg.p = "3/5";
  cfg.y = "0,2";
  cfg.x_lo = -1;
  cfg.x_hi = 4;
  cfg.m = 2;
  cfg.L = 2;
  cfg.t = {0.3, 1.0};
  cfg.methods = {"thm1", "mc"};
  cfg.nodes = 32;
  cfg.samples = 5000;
  cfg.seed = 123;
  cfg.out = "somewhere";
  const RunConfig back = config_from_json(config_to_json(cfg));
  CHECK(back.p == cfg.p);
  CHECK(back.y == cfg.y);
  CHECK(back.x_lo == cfg.x_lo);
  CHECK(back.x_hi == cfg.x_hi);
  CHECK(back.m == cfg.m);
  CHECK(back.L == cfg.L);
  CHECK(back.t == cfg.t);
  CHECK(back.methods == cfg.methods);
  CHECK(back.nodes == cfg.nodes);
  CHECK(back.samples == cfg.samples);
  CHECK(back.seed == cfg.seed);
  CHECK(back.out == cfg.out);
}

TEST_CASE("cmd_block_prob writes CSV and sidecar that round-trip the run") {
  RunConfig cfg;
  cfg.y = "0,2,5";
  cfg.x_lo = 1;
  cfg.x_hi = 2;
  cfg.m = 1;
  cfg.L = 1;
  cfg.t = {0.4};
  cfg.methods = {"thm1", "uniformization"};
  cfg.nodes = 32;
  cfg.out = tmp_path("blockprob");
  std::ostringstream log;
  CHECK(cmd_block_prob(cfg, log) == kExitPass);

  // CSV: header plus one row per (x, t, method)
  std::ifstream csv(cfg.out + ".csv");
  REQUIRE(csv.good());
  std::string line;
  std::getline(csv, line);
  CHECK(line == "x,m,L,t,method,value,abs_error");
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 4);

  // sidecar reproduces the run's inputs exactly
  std::ifstream js(cfg.out + ".json");
  REQUIRE(js.good());
  nlohmann::json j;
  js >> j;
  const RunConfig back = config_from_json(j.at("config"));
  CHECK(back.y == cfg.y);
  CHECK(back.methods == cfg.methods);
  CHECK(back.x_lo == cfg.x_lo);
  CHECK(j.at("reports").size() == 4);
  for (const auto& rep : j.at("reports")) {
    CHECK(rep.contains("instance"));
    CHECK(rep.contains("method"));
    CHECK(rep.contains("value"));
    CHECK(rep.contains("abs_error"));
    CHECK(rep.contains("runtime_ms"));
  }
}

TEST_CASE("cmd_identities exit codes") {
  RunConfig cfg;
  cfg.id_max_n = 3;
  cfg.id_max_l = 1;
  cfg.trials = 2;
  cfg.p = "7/10";
  std::ostringstream log;
  CHECK(cmd_identities(cfg, log) == kExitPass);
  cfg.corrupt = true;
  CHECK(cmd_identities(cfg, log) == kExitComparisonFailure);
}

TEST_CASE("cmd_compare gates on the declared tolerance") {
  RunConfig cfg;
  cfg.y = "0,2,5";
  cfg.x_lo = 2;
  cfg.x_hi = 2;
  cfg.t = {0.5};
  cfg.methods = {"thm1", "thm2"};
  cfg.nodes = 32;
  cfg.tol = 1e-6;
  std::ostringstream log;
  CHECK(cmd_compare(cfg, log) == kExitPass);
  cfg.tol = 1e-15;  // deliberately mismatched
  CHECK(cmd_compare(cfg, log) == kExitComparisonFailure);
  cfg.methods = {"thm1"};
  CHECK_THROWS_AS(cmd_compare(cfg, log), config_error);
}

TEST_CASE("method/parameter incompatibility maps to exit 4") {
  RunConfig cfg;
  cfg.y = "0,2";
  cfg.p = "0";  // thm1 requires p > 0
  cfg.methods = {"thm1"};
  std::ostringstream log;
  const int rc = run_command([&] { return cmd_block_prob(cfg, log); }, log);
  CHECK(rc == kExitParameterError);
}

#ifdef ASEP_CLI_PATH
TEST_CASE("binary: flags, config file and exit codes") {
  CHECK(run_cli("block-prob --y 0,2 --x 1 --t 0.3 --method thm1 --nodes 32 --out " +
                tmp_path("bin1")) == kExitPass);
  CHECK(run_cli("block-prob --y 0,2 --x 5..3 --t 0.3") == kExitConfigError);
  CHECK(run_cli("block-prob --y step --x 1 --t 0.3") == kExitConfigError);
  CHECK(run_cli("transition-prob --y 0,2 --X 1,3 --t 0.4 --nodes 32 --method pxy,uniformization") ==
        kExitPass);
  CHECK(run_cli("identities --max-n 3 --max-l 1 --trials 2") == kExitPass);
  CHECK(run_cli("identities --max-n 3 --max-l 1 --trials 2 --corrupt true") ==
        kExitComparisonFailure);
  CHECK(run_cli("oracle --y 0,2 --x 1 --t 0.3 --method uniformization") == kExitPass);
  CHECK(run_cli("nonsense-subcommand") == kExitConfigError);

  // command line wins over the config file
  const std::string cfg_path = tmp_path("bin.cfg");
  {
    std::ofstream out(cfg_path);
    out << "[model]\ny = 0,2\n[query]\nx = 9\nt = 0.3\nmethod = thm1\n[contour]\nnodes = 32\n";
  }
  const std::string out_prefix = tmp_path("bin2");
  CHECK(run_cli("block-prob --config " + cfg_path + " --x 1 --out " + out_prefix) == kExitPass);
  std::ifstream csv(out_prefix + ".csv");
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  CHECK(row.substr(0, 2) == "1,");  // x=1 from the flag, not x=9 from the file
}
#endif
