#include "noisycoin/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "noisycoin/estimators.hpp"
#include "noisycoin/numeric.hpp"

namespace noisycoin {

std::string to_string(BetaBranch branch) {
  return branch == BetaBranch::balance ? "balance" : "minimize";
}

HedgingDiagnostics hedging_diagnostics(const TrialModel& model, double beta, int grid_size) {
  const Estimator est = hedged_ml_table(model, HedgingParam(beta));
  const RiskProfile profile = risk_profile(est, grid_size);
  HedgingDiagnostics d{beta, profile.values.front(), 0.0, 0.5, RiskFunction(est)(0.5), 0.0};
  for (const auto& m : profile.maxima) {
    if (m.p > 0.0 && m.p < 1.0 && m.risk > d.interior_peak) {
      d.interior_peak = m.risk;
      d.interior_peak_p = m.p;
    }
  }
  d.max_risk = std::max(profile.global_max().risk, d.risk_at_zero);
  return d;
}

BetaChoice optimal_beta(const TrialModel& model, int grid_size) {
  auto balance = [&](double beta) {
    const auto d = hedging_diagnostics(model, beta, grid_size);
    return d.risk_at_zero - d.interior_peak;
  };
  const double lo = balance(kBetaLower);
  const double hi = balance(kBetaUpper);
  if ((lo < 0.0) != (hi < 0.0)) {
    const double beta = numeric::bracketed_root(balance, kBetaLower, kBetaUpper, 44);
    return {hedging_diagnostics(model, beta, grid_size), BetaBranch::balance};
  }
  const auto best = numeric::maximize(
      [&](double beta) { return -hedging_diagnostics(model, beta, grid_size).max_risk; }, kBetaLower,
      kBetaUpper);
  return {hedging_diagnostics(model, best.x, grid_size), BetaBranch::minimize};
}

BetaSweep beta_sweep(const std::vector<int>& trials, const std::vector<double>& noises, int grid_size) {
  BetaSweep sweep{trials, noises, {}};
  std::vector<std::pair<int, double>> keys;
  for (double a : noises) {
    for (int n : trials) keys.emplace_back(n, a);
  }
  std::vector<std::optional<BetaSweepCell>> cells(keys.size());
  numeric::parallel_for(keys.size(), [&](std::size_t i) {
    const TrialModel model(keys[i].first, keys[i].second);
    cells[i] = BetaSweepCell{keys[i].first, keys[i].second, optimal_beta(model, grid_size)};
  });
  for (auto& c : cells) sweep.cells.push_back(std::move(*c));
  return sweep;
}

}  // namespace noisycoin
