#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "noisycoin/estimators.hpp"
#include "noisycoin/risk.hpp"

namespace noisycoin {

struct LfpTrace {
  int iteration;
  std::size_t support_size;
  double bayes_risk;
  double max_risk;
  double gap;
  std::string action;  // what the outer loop did after this iteration
};

struct LfpOptions {
  double tolerance = 1e-6;
  int max_iterations = 200;
  int grid_size = kDefaultGridSize;
  /// Starting prior; must be symmetric under p -> 1 - p. Defaults to equal
  /// weights on {0, 1/sqrt(N), 1/2, 1 - 1/sqrt(N), 1}.
  std::optional<DiscretePrior> seed;
  /// Before the add-point loop, run a fixed-grid ascent of the Bayes risk
  /// (grid plus seed atoms) and start from its clustered support.
  bool warm_start = true;
  int warm_start_steps = 3000;
  /// Called once per outer iteration.
  std::function<void(const LfpTrace&)> on_iteration;
};

struct LfpResult {
  TrialModel model;
  DiscretePrior prior;
  Estimator estimator;  // Bayes mean of `prior`
  double bayes_risk;
  double max_risk;
  RiskMaximum worst;    // where max_risk is attained
  double duality_gap;   // (max_risk - bayes_risk) / max_risk
  double tolerance;
  int iterations;
  bool converged;
  std::vector<LfpTrace> trace;
};

/// Least-favorable-prior search: alternately optimizes the locations and
/// weights of a symmetric discrete prior to maximize the Bayes risk of its own
/// posterior-mean estimator, and inserts new atoms at off-support risk peaks,
/// until max risk and Bayes risk agree to `tolerance` (relative).
/// Atoms far lighter than the heaviest are held fixed during optimization and
/// lifted again when a risk peak sits on one. If the search stalls, it adds a
/// fixed background density of mass tolerance / 100 under the atoms and goes
/// on; such background points fail the pointwise check in verify_duality.
/// Non-convergence is reported through `converged`, not thrown.
LfpResult lfp_search(const TrialModel& model, const LfpOptions& options = {});
LfpResult lfp_search(const TrialModel& model, double tolerance, int max_iterations);

std::vector<SupportPoint> default_seed(const TrialModel& model);

struct DualityCheck {
  double point;
  double weight;
  double risk;
  double deviation;  // |risk - max_risk| / max_risk
};

struct DualityReport {
  std::vector<DualityCheck> points;
  double max_risk;
  double threshold;  // relative deviation allowed per support point
  bool passed;
};

/// Minimax-Bayes certificate: the prior's Bayes estimator must have pointwise
/// risk equal to its maximum risk at every support point (within 10x tol).
/// At large N the search keeps faint atoms below the maximum that still hold
/// the risk down elsewhere; they fail this check while the gap certifies.
DualityReport verify_duality(const LfpResult& result);
DualityReport verify_duality(const Estimator& estimator, const DiscretePrior& prior,
                             double tolerance, int grid_size = kDefaultGridSize);

}  // namespace noisycoin
