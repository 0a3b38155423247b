#pragma once

#include <string>
#include <vector>

#include "noisycoin/model.hpp"
#include "noisycoin/risk.hpp"

namespace noisycoin {

enum class BetaBranch {
  balance,   // R(0) equated with the largest interior risk peak
  minimize,  // no sign change; max risk minimized directly
};

std::string to_string(BetaBranch branch);

inline constexpr double kBetaLower = 1e-4;
inline constexpr double kBetaUpper = 1.0;

/// Risk diagnostics of the hedged ML estimator at one beta.
struct HedgingDiagnostics {
  double beta;
  double risk_at_zero;
  double interior_peak;    // largest local maximum with 0 < p < 1, 0 if none
  double interior_peak_p;
  double risk_at_half;
  double max_risk;
};

HedgingDiagnostics hedging_diagnostics(const TrialModel& model, double beta,
                                       int grid_size = kDefaultGridSize);

struct BetaChoice {
  HedgingDiagnostics at;  // diagnostics at the chosen beta
  BetaBranch branch;

  double beta() const { return at.beta; }
  double max_risk() const { return at.max_risk; }
};

/// The beta in [1e-4, 1] minimizing the maximum risk of hedged ML.
BetaChoice optimal_beta(const TrialModel& model, int grid_size = kDefaultGridSize);

struct BetaSweepCell {
  int trials;
  double noise;
  BetaChoice choice;
};

struct BetaSweep {
  std::vector<int> trials;
  std::vector<double> noises;
  std::vector<BetaSweepCell> cells;  // noise-major, then trials ascending
};

BetaSweep beta_sweep(const std::vector<int>& trials, const std::vector<double>& noises,
                     int grid_size = kDefaultGridSize);

}  // namespace noisycoin
