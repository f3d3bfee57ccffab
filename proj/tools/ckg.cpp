// Command-line front end: solve, check, certify, verify.
#include "ckg/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet solver for prescribed mean curvature conformal Killing graphs"};
  app.require_subcommand(1);

  std::string problem, solution, out_dir, cert_out;
  bool strict = false;

  auto* solve = app.add_subcommand("solve", "solve a problem file and write a run bundle");
  solve->add_option("problem", problem, "problem file (JSON)")->required()->check(CLI::ExistingFile);
  solve->add_option("--out", out_dir, "output directory")->required();
  solve->add_flag("--strict", strict, "fail with exit code 1 when a hypothesis fails");

  auto* check = app.add_subcommand("check", "print the hypothesis report");
  check->add_option("problem", problem, "problem file (JSON)")->required()->check(CLI::ExistingFile);

  auto* certify = app.add_subcommand("certify", "barrier certificates for a solution");
  certify->add_option("problem", problem, "problem file (JSON)")->required()->check(CLI::ExistingFile);
  certify->add_option("solution", solution, "solution CSV")->required()->check(CLI::ExistingFile);
  certify->add_option("--out", cert_out, "write the certificates here instead of standard output");

  auto* verify = app.add_subcommand("verify", "compare recovered and prescribed mean curvature");
  verify->add_option("problem", problem, "problem file (JSON)")->required()->check(CLI::ExistingFile);
  verify->add_option("solution", solution, "solution CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ckg::kExitInputError;
  }

  if (*solve) return ckg::cmd_solve(problem, out_dir, strict, std::cout, std::cerr);
  if (*check) return ckg::cmd_check(problem, std::cout, std::cerr);
  if (*certify) return ckg::cmd_certify(problem, solution, cert_out, std::cout, std::cerr);
  return ckg::cmd_verify(problem, solution, std::cout, std::cerr);
}
