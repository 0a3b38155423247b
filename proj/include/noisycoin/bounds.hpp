#pragma once

#include <vector>

#include "noisycoin/model.hpp"

namespace noisycoin {

/// Best two-point prior found for an anchor p': weight w on p', 1 - w on p''.
struct BimodalResult {
  double anchor;
  double risk;         // R2(p'), Bayes risk of the witness prior
  double weight;       // w
  double other;        // p''
  int coarse_points;   // p'' grid points scanned before refinement
};

struct BimodalOptions {
  /// Size parameter of the densified p'' grid used by the coarse scan.
  int coarse_grid = 401;
  /// The weight grid is {1/(steps-1), ..., 1 - 1/(steps-1)}; 0 and 1 are
  /// point masses with zero Bayes risk and are handled separately.
  int weight_steps = 51;
  /// Number of best coarse cells refined with Nelder-Mead.
  int refine_starts = 3;
};

/// Bayes risk of the prior w delta(p') + (1 - w) delta(p'') under its own
/// two-term posterior mean.
double two_point_bayes_risk(const TrialModel& model, double anchor, double other, double weight);

/// R2(p') = max over (w, p'') of two_point_bayes_risk. A numerical lower
/// bound on the true maximum.
BimodalResult bimodal_risk(const TrialModel& model, double anchor,
                           const BimodalOptions& options = {});

std::vector<BimodalResult> bimodal_profile(const TrialModel& model, const std::vector<double>& anchors,
                                           const BimodalOptions& options = {});

}  // namespace noisycoin
