// asep-blocks: exact and numerical ASEP block probabilities.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "asep/cli.hpp"

namespace {

void add_common_flags(CLI::App* cmd, asep::RunConfig& cfg, std::string& config_path) {
  cmd->add_option("--config", config_path, "config file (sections, key = value)");
  auto bind = [&cfg, cmd](const char* flag, const char* key, const char* help) {
    cmd->add_option_function<std::string>(
           flag, [&cfg, key](const std::string& v) { asep::apply_config_key(cfg, key, v); }, help)
        ->take_last();
  };
  bind("--p", "model.p", "hop rate p, exact rational ('7/10' or '0.7')");
  bind("--y", "model.y", "initial configuration: '0,2,5' or 'step'");
  bind("--X", "query.X", "target configuration for transition-prob");
  bind("--x", "query.x", "site or site range 'a..b'");
  bind("--m", "query.m", "particle rank (1-based)");
  bind("--L", "query.L", "block length");
  bind("--t", "query.t", "time list 't1,t2,...'");
  bind("--method", "query.method", "methods: thm1,thm2,thm3,series,mc,uniformization,pxy");
  bind("--samples", "oracle.samples", "Monte Carlo samples");
  bind("--seed", "oracle.seed", "Monte Carlo seed");
  bind("--nodes", "contour.nodes", "quadrature nodes per circle (power of two)");
  bind("--k-max", "contour.k_max", "series truncation order");
  bind("--tol", "oracle.tol", "oracle truncation / comparison tolerance");
  bind("--z-max", "compare.z_max", "Monte Carlo z-score gate");
  bind("--workers", "run.workers", "worker pool cap");
  bind("--out", "run.out", "output path prefix (.csv + .json)");
  bind("--max-n", "identities.max_n", "identity suite: largest N");
  bind("--max-l", "identities.max_l", "identity suite: largest L");
  bind("--trials", "identities.trials", "identity suite: rational trials per check");
  bind("--corrupt", "identities.corrupt", "test hook: corrupt one summand");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact and numerical block probabilities for ASEP"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const asep::RunConfig&, std::ostream&);
  };
  const Sub subs[] = {
      {"identities", "verify the exact combinatorial identities", asep::cmd_identities},
      {"block-prob", "finite-Y block probabilities", asep::cmd_block_prob},
      {"transition-prob", "transition probability P_Y(X,t)", asep::cmd_transition_prob},
      {"step-block-prob", "step-IC block probabilities", asep::cmd_step_block_prob},
      {"compare", "cross-method comparison report", asep::cmd_compare},
      {"oracle", "stochastic / matrix-exponential ground truth", asep::cmd_oracle},
  };

  asep::RunConfig cfg;
  std::string config_path;
  int (*selected)(const asep::RunConfig&, std::ostream&) = nullptr;
  for (const auto& sub : subs) {
    CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
    add_common_flags(cmd, cfg, config_path);
    auto run = sub.run;
    cmd->parse_complete_callback([&selected, run] { selected = run; });
  }

  // config file first, command line wins: parse flags twice around the file load
  return asep::run_command(
      [&]() -> int {
        try {
          app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
          if (e.get_exit_code() == 0) return app.exit(e);  // --help
          std::cerr << e.what() << "\n";
          return asep::kExitConfigError;
        }
        if (!config_path.empty()) {
          asep::RunConfig from_file;
          asep::load_config_file(from_file, config_path);
          cfg = from_file;
          try {
            app.clear();
            app.parse(argc, argv);  // reapply flags on top of the file values
          } catch (const CLI::ParseError& e) {
            std::cerr << e.what() << "\n";
            return asep::kExitConfigError;
          }
        }
        if (!selected) return asep::kExitConfigError;
        return selected(cfg, std::cout);
      },
      std::cerr);
}
