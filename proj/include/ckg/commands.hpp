#pragma once

#include "ckg/problem_file.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>

namespace ckg {

/// Process exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitStalled = 2,       // also: a requested check or certificate failed
  kExitLeftInterval = 3,
};

/// Solves the problem file and writes solution.csv, report.json, log.jsonl
/// and mesh.json into out_dir.  report.json is written on every path that
/// can create the directory.
int cmd_solve(const std::filesystem::path& problem_file, const std::filesystem::path& out_dir, bool strict,
              std::ostream& out, std::ostream& err);

/// Prints the hypothesis report as JSON.
int cmd_check(const std::filesystem::path& problem_file, std::ostream& out, std::ostream& err);

/// Runs the barrier searches requested by the file (both when none is
/// requested) against a solution and prints the certificates as JSON, or
/// writes them to `certificates_out` when it is non-empty.
int cmd_certify(const std::filesystem::path& problem_file, const std::filesystem::path& solution_csv,
                const std::filesystem::path& certificates_out, std::ostream& out, std::ostream& err);

/// Compares the recovered mean curvature of a solution with the prescribed H.
int cmd_verify(const std::filesystem::path& problem_file, const std::filesystem::path& solution_csv,
               std::ostream& out, std::ostream& err);

/// Barrier certificates of `z` for the checks requested in `pf` (both
/// barriers when `all` is set).  `valid` is cleared when any fails.
nlohmann::json certify_solution(const ProblemFile& pf, const ScalarField& z, bool all, bool& valid);

/// Discrepancy between recovered and prescribed H over interior vertices.
nlohmann::json verify_solution(const ProblemFile& pf, const ScalarField& z, bool& pass);

}  // namespace ckg
