// nisio: principal eigenvalue solver for risk-sensitive control problems.
//
//   nisio <command> <config> [--seed N] [--out DIR] [--n N] [--f ones|phi|EXPR]

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "nisio/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Principal eigenpairs of controlled diffusion semigroups"};
  app.require_subcommand(1, 1);

  nisio::RunFlags flags;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir, f_spec;
  int n = 0;
  bool quiet = false;

  const std::map<std::string, std::string> about{
      {"solve", "principal eigenpair by evolution and policy iteration"},
      {"bounds", "Collatz-Wielandt bounds at a test function"},
      {"dv", "Donsker-Varadhan estimate (single control)"},
      {"hji-check", "residual of the discrete HJI equation"},
      {"simulate", "Monte Carlo estimate of the finite-horizon growth rate"},
      {"orbit", "normalized orbit statistics and contraction fit"},
      {"evolve", "evolve an initial function and check the generator limit"},
      {"matrix-cw", "Perron root and Collatz-Wielandt bounds of a matrix"}};

  for (const auto& name : nisio::command_names()) {
    const auto it = about.find(name);
    CLI::App* sub = app.add_subcommand(name, it == about.end() ? "" : it->second);
    sub->add_option("config", config_path, "experiment config file")->required();
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--n", n, "override grid points per axis");
    if (name == "bounds") sub->add_option("--f", f_spec, "test function: ones, phi or an expression");
    sub->add_flag("--quiet", quiet, "do not echo the report on stdout");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const nisio::ValidationError err(e.what());
    std::cerr << nisio::error_json(err, 1) << '\n';
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) flags.seed = seed;
  if (sub->count("--out")) flags.out = out_dir;
  if (sub->count("--n")) flags.n = n;
  if (sub->get_option_no_throw("--f") && sub->count("--f")) flags.f = f_spec;
  flags.echo = !quiet;
  return nisio::run_file(sub->get_name(), config_path, flags, std::cout, std::cerr);
}
