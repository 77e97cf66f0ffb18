// Command-line front end: recurrence analysis, asymptotic pairings, Lyapunov
// 1-form construction and verification over built-in or configured scenarios.

#include <iostream>

#include <CLI11.hpp>

#include "orbiflow/cli.hpp"

using namespace orbiflow;

namespace {

void add_common(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--scenario", opt.scenario_name, "built-in scenario name");
  cmd->add_option("--config", opt.config_path, "scenario config file");
  cmd->add_option("--resolution", opt.resolution, "boxes per axis (power of two)");
  cmd->add_option("--T", opt.T_edge, "edge integration time");
  cmd->add_option("--delta", opt.delta, "chain jump tolerance");
  cmd->add_option("--step", opt.step, "integrator step");
  cmd->add_option("--samples", opt.samples, "sample lattice points per axis");
  cmd->add_option("--seed", opt.seed, "sample pattern seed");
  cmd->add_option("--out-dir", opt.out_dir, "artifact directory");
  cmd->add_flag("--check-expected", opt.check_expected,
                "exit nonzero unless computed flags match the scenario expectations");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orbiflow: chain recurrence, asymptotic cycles, and Lyapunov 1-forms\n"
               "for flows on flat torus quotients"};
  app.require_subcommand(1);

  CliOptions rec_opt, asy_opt, lya_opt, ver_opt;
  std::string measure = "ulam";
  std::string form_file, y_spec = "none";
  bool override_b = false;
  std::string scen_sub, scen_name;

  auto* rec = app.add_subcommand("recurrence", "box-level recurrent sets and class split");
  add_common(rec, rec_opt);

  auto* asy = app.add_subcommand("asymptotic", "asymptotic cycle pairings");
  add_common(asy, asy_opt);
  asy->add_option("--measure", measure, "ulam | ulam-cxi | trajectory:x,y[,T]");

  auto* lya = app.add_subcommand("lyapunov", "construct and verify a Lyapunov 1-form");
  add_common(lya, lya_opt);
  lya->add_flag("--force", override_b, "attempt construction even if the cycle bound fails");

  auto* ver = app.add_subcommand("verify", "verify a candidate 1-form");
  add_common(ver, ver_opt);
  ver->add_option("--form-file", form_file, "file with a [form] section (combinators)");
  ver->add_option("--y", y_spec, "invariant set: auto | zeros | none");

  auto* scen = app.add_subcommand("scenarios", "list or show built-in scenarios");
  scen->add_option("action", scen_sub, "list | show")->required();
  scen->add_option("name", scen_name, "scenario name for show");

  CLI11_PARSE(app, argc, argv);

  try {
    if (rec->parsed()) return cmd_recurrence(rec_opt, std::cout);
    if (asy->parsed()) return cmd_asymptotic(asy_opt, measure, std::cout);
    if (lya->parsed()) return cmd_lyapunov(lya_opt, std::cout, override_b);
    if (ver->parsed()) return cmd_verify(ver_opt, form_file, y_spec, std::cout);
    if (scen->parsed()) return cmd_scenarios(scen_sub, scen_name, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
