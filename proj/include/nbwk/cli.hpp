#pragma once

// nbody-wkam <phi|table|wkam|verify|calibrate|kepler> --problem FILE [--out DIR]
//            [--seed N] [--nodes N] [--tol X] [--t-scan N]
//
// Every subcommand writes <command>_report.json into the output directory;
// the potential cache lives at $NBODY_WKAM_CACHE or <out>/phi_cache.jsonl.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "nbwk/io.hpp"
#include "nbwk/minimize.hpp"

namespace nbwk::cli {

enum ExitCode : int {
  kPass = 0,
  kUsage = 1,
  kNonConvergence = 2,
  kDivergence = 3,
  kCalibrationAbort = 4,
};

struct RunSpec {
  std::string command;
  std::filesystem::path problem;
  std::filesystem::path out = ".";
  std::uint64_t seed = 1;
  MinimizeOptions opts;
  std::filesystem::path cache;
};

/// Output of one subcommand: exit code, report, and the files it wrote.
struct Outcome {
  int code = kPass;
  io::Report report;
};

Outcome cmd_phi(const RunSpec& spec, const io::Problem& problem, std::ostream& log);
Outcome cmd_table(const RunSpec& spec, const io::Problem& problem, std::ostream& log);
Outcome cmd_wkam(const RunSpec& spec, const io::Problem& problem, std::ostream& log);
Outcome cmd_verify(const RunSpec& spec, const io::Problem& problem, std::ostream& log);
Outcome cmd_calibrate(const RunSpec& spec, const io::Problem& problem, std::ostream& log);
Outcome cmd_kepler(const RunSpec& spec, const io::Problem& problem, std::ostream& log);

/// Runs a parsed RunSpec; writes the report and returns the exit code.
int execute(const RunSpec& spec, std::ostream& log, std::ostream& err);

/// Parses argv and executes; usage and IO problems map to kUsage.
int main(int argc, char** argv);

}  // namespace nbwk::cli
