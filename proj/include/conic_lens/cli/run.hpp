#pragma once

#include <string>
#include <vector>

#include "conic_lens/cli/config.hpp"

namespace conic::cli {

struct Assertion {
  std::string name;
  std::string anchor;  // the statement being checked
  bool pass = false;
  double value = 0;
  double tolerance = 0;
};

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalFailure = 3 };

// Runs one experiment and writes CSV + JSON (and the optional dense CSV)
// into out_dir. Returns the process exit code.
int run(const ExperimentConfig& cfg, int jobs, const std::string& out_dir);

// 17 significant digits.
std::string fmt_num(double x);
// RFC-4180 field quoting.
std::string csv_field(const std::string& s);

}  // namespace conic::cli
