#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "noisycoin/risk.hpp"
#include "output.hpp"

namespace noisycoin::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNotConverged = 3;

/// Thrown for any user error detected before or during dispatch.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  int trials = 100;
  double alpha = 0.0;
  std::optional<double> beta;
  std::string estimator = "hml";
  std::string prior;  // "p:w,p:w,..." for bayes-discrete
  int grid = kDefaultGridSize;
  double tolerance = 1e-6;
  int max_iterations = 200;
  Format format = Format::csv;
  std::string output;
  std::uint64_t seed = 0;
  bool desk_scale = false;
  std::vector<int> trials_list;     // tune-beta
  std::vector<double> alpha_list;   // tune-beta
  int anchors = 101;                // bimodal
  std::vector<double> anchor_list;  // bimodal, overrides `anchors`
  std::string figure;               // reproduce
};

struct Outcome {
  Document doc;
  int status = kExitSuccess;
};

extern const std::vector<std::string> kEstimators;
extern const std::vector<std::string> kFigures;

/// Checks every numeric field against the preconditions of `config.command`.
void validate(const RunConfig& config);

Outcome cmd_estimate(const RunConfig& config, std::ostream& log);
Outcome cmd_risk_profile(const RunConfig& config, std::ostream& log);
Outcome cmd_lfp(const RunConfig& config, std::ostream& log);
Outcome cmd_bimodal(const RunConfig& config, std::ostream& log);
Outcome cmd_tune_beta(const RunConfig& config, std::ostream& log);

struct ReproduceResult {
  std::vector<std::filesystem::path> files;  // relative to the output directory
  std::filesystem::path manifest;
  int status = kExitSuccess;
};

/// Writes one file per curve of the figure plus manifest.json into `dir`.
ReproduceResult cmd_reproduce(const RunConfig& config, const std::filesystem::path& dir, std::ostream& log);

}  // namespace noisycoin::cli
