#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "lightray/cli/config.hpp"
#include "lightray/error.hpp"

namespace lightray::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitQuadrature = 3,
  kExitOutOfBand = 4,
  kExitApertureTooSmall = 5,
  kExitExperimentFailed = 6,
};

int exit_code(ErrorCode code);

struct CommandOutcome {
  int exit_code = kExitOk;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> files;
  /// Human-readable summary, also written next to the outputs.
  std::string summary;
};

/// Built-in analytic field or grid-sampled field from the config.
std::unique_ptr<VectorField> make_run_field(const RunConfig& config);

/// sinogram.csv and sinogram.lrgf.
CommandOutcome cmd_forward(const RunConfig& config);
/// slice_check.csv and slice_summary.txt.
CommandOutcome cmd_slice_check(const RunConfig& config);
/// spectrum.lrgf, spatial.lrgf, unrecovered.csv and, for analytic fields, error.csv.
CommandOutcome cmd_reconstruct(const RunConfig& config);
/// support_report.csv and support_summary.txt; exit 6 when the experiment fails.
CommandOutcome cmd_support_demo(const RunConfig& config);

std::string formats_text();

}  // namespace lightray::cli
