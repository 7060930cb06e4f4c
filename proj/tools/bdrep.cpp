#include <CLI11.hpp>
#include <bdr/cli.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace {

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

const FlagSpec kFlags[] = {
    {"--rank", "rank", "free group rank r (>= 2)"},
    {"--epsilon", "epsilon", "visual metric parameter"},
    {"--t", "t", "representation parameter"},
    {"--t-prime", "t_prime", "second representation parameter (schur)"},
    {"--level", "level", "cylinder level of the test vectors"},
    {"--levels", "levels", "level list, e.g. 1..4 or 1,3"},
    {"--t-grid", "t_grid", "t list, e.g. 0.05:0.05:0.9 or 0.1,0.2"},
    {"--n-max", "n_max", "largest sphere radius / depth"},
    {"--tol", "tol", "verdict tolerance"},
    {"--rhs-tol", "rhs_tol", "refinement tolerance for limit values"},
    {"--pairing", "pairing", "pairing index i (0: L2, 1: H_t, 2: K_t)"},
    {"--pairing-prime", "pairing_prime", "pairing index j for the second factor (schur)"},
    {"--mode", "mode", "pairs mode: radial or cylinder"},
    {"--format", "format", "csv or json"},
    {"--out", "out", "output file (default stdout)"},
    {"--cache-dir", "cache_dir", "directory for Gram and sphere statistics caches"},
    {"--threads", "threads", "worker threads"},
    {"--seed", "seed", "seed for Monte-Carlo oracles"},
    {"--budget", "budget", "largest enumeration allowed"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for spherical boundary representations of free groups"};
  app.set_version_flag("--version", std::string("bdrep ") + BDR_VERSION);
  std::map<std::string, std::string> values;
  for (const auto& f : kFlags) app.add_option(f.flag, values[f.key], f.help);
  std::string config_file;
  bool timings = false;
  app.add_option("--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_flag("--timings", timings, "add wall-clock columns (not reproducible)");
  std::string command;
  for (const auto& name : bdr::subcommands())
    app.add_subcommand(name, "run the " + name + " experiment")->fallthrough();
  app.require_subcommand(0, 1);
  app.footer("Environment overrides: BDREP_<KEY>, e.g. BDREP_N_MAX=10. Precedence: defaults < --config < env < flags.\n"
             "Exit codes: 0 pass, 1 verdict failure, 2 usage error, 3 internal error.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bdr::kExitUsage;
  }

  bdr::RunConfig cfg;
  try {
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw bdr::IoError("cannot read " + config_file);
      std::stringstream ss;
      ss << in.rdbuf();
      cfg = bdr::parse_config_entries(ss.str(), cfg);
    }
    bdr::apply_env_overrides(cfg);
    for (const auto& f : kFlags)
      if (app.count(f.flag) > 0) bdr::set_config_key(cfg, f.key, values[f.key]);
    if (timings) cfg.timings = true;
  } catch (const bdr::Error& e) {
    std::cerr << "bdrep: " << e.code() << ": " << e.what() << "\n";
    return bdr::kExitUsage;
  }

  for (auto* sub : app.get_subcommands()) command = sub->get_name();
  if (command.empty()) command = cfg.experiment;
  if (command.empty()) {
    std::cerr << app.help();
    return bdr::kExitUsage;
  }
  return bdr::run(command, cfg, std::cout, std::cerr);
}
