// varexp-pde: command-line front end for the variable-exponent toolkit.

#include <string>

#include <CLI11.hpp>

#include "varexp/cli/commands.hpp"

int main(int argc, char** argv) {
  using varexp::cli::Command;
  CLI::App app{"Variable-exponent quasilinear PDE toolkit"};
  app.set_version_flag("--version", std::string(varexp::kVersion));
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    Command command;
  };
  const Sub subs[] = {
      {"check-picone", "verify the Picone inequality on a grid", Command::kCheckPicone},
      {"check-diaz-saa", "verify the Diaz-Saa inequality on a grid", Command::kCheckDiazSaa},
      {"check-norms", "check Luxemburg norm / modular bounds and Holder's inequality", Command::kCheckNorms},
      {"solve-elliptic", "minimise a discrete elliptic energy", Command::kSolveElliptic},
      {"solve-fde", "run the implicit Euler scheme for the doubly nonlinear evolution", Command::kSolveFde},
      {"probe-kernel", "probe the structural hypotheses of an operator kernel", Command::kProbeKernel},
  };

  std::string config;
  std::string out_dir;
  std::string config_a;
  std::string config_b;
  int code = varexp::cli::kOk;

  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("-c,--config", config, "configuration file")->required();
    sub->add_option("-o,--out", out_dir, "output directory (overrides output.dir)");
    const Command command = s.command;
    sub->callback([&, command] { code = varexp::cli::run_command(command, config, out_dir); });
  }
  CLI::App* contraction =
      app.add_subcommand("verify-contraction", "run two evolutions and check the L2 contraction estimate");
  contraction->add_option("--config-a", config_a, "first solve-fde configuration")->required();
  contraction->add_option("--config-b", config_b, "second solve-fde configuration")->required();
  contraction->add_option("-o,--out", out_dir, "output directory (overrides output.dir of config a)");
  contraction->callback([&] { code = varexp::cli::run_contraction_command(config_a, config_b, out_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : varexp::cli::kConfigError;
  }
  return code;
}
