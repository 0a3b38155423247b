#include "noisycoin/risk.hpp"

#include <algorithm>
#include <cmath>

#include "noisycoin/numeric.hpp"

namespace noisycoin {

namespace {

std::vector<double>& scratch(std::size_t size) {
  thread_local std::vector<double> buffer;
  if (buffer.size() < size) buffer.resize(size);
  return buffer;
}

}  // namespace

double kl_bernoulli(double estimate, double truth) {
  require_probability(estimate, "estimate");
  require_probability(truth, "truth");
  if (truth == 0.0) return estimate == 1.0 ? kInfiniteRisk : -std::log1p(-estimate);
  if (truth == 1.0) return estimate == 0.0 ? kInfiniteRisk : -std::log(estimate);
  if (estimate == 0.0 || estimate == 1.0) return kInfiniteRisk;
  // Each log as log1p of a relative step keeps accuracy when estimate ~ truth.
  const double d = truth - estimate;
  return std::max(0.0, truth * std::log1p(d / estimate) + (1.0 - truth) * std::log1p(-d / (1.0 - estimate)));
}

RiskFunction::RiskFunction(const Estimator& estimator)
    : dist_(estimator.model()),
      log_est_(estimator.estimates().size()),
      log_not_est_(estimator.estimates().size()) {
  const auto est = estimator.estimates();
  for (std::size_t n = 0; n < est.size(); ++n) {
    const double v = std::clamp(est[n], 0.0, 1.0);
    log_est_[n] = std::log(v);
    log_not_est_[n] = std::log1p(-v);
  }
}

double RiskFunction::operator()(double p) const {
  auto& mass = scratch(log_est_.size());
  const auto [first, last] = dist_.fill(p, mass);
  const double log_p = p > 0.0 ? std::log(p) : 0.0;
  const double log_not_p = p < 1.0 ? std::log1p(-p) : 0.0;
  double risk = 0.0;
  for (int n = first; n <= last; ++n) {
    double kl = 0.0;
    if (p > 0.0) kl += p * (log_p - log_est_[n]);
    if (p < 1.0) kl += (1.0 - p) * (log_not_p - log_not_est_[n]);
    if (std::isinf(kl)) return kInfiniteRisk;
    risk += mass[n] * kl;
  }
  return std::max(0.0, risk);
}

double RiskFunction::derivative(double p) const {
  auto& mass = scratch(log_est_.size());
  const auto [first, last] = dist_.fill(p, mass);
  const TrialModel& model = dist_.model();
  const int trials = model.trials();
  const double slope = 1.0 - 2.0 * model.noise();
  const double q = effective_prob(model, p);
  const double log_p = std::log(p);
  const double log_not_p = std::log1p(-p);
  double out = 0.0;
  for (int n = first; n <= last; ++n) {
    const double kl = p * (log_p - log_est_[n]) + (1.0 - p) * (log_not_p - log_not_est_[n]);
    const double score = slope * (n / q - (trials - n) / (1.0 - q));
    out += mass[n] * (score * kl + log_p - log_not_p - log_est_[n] + log_not_est_[n]);
  }
  return out;
}

double pointwise_risk(const Estimator& estimator, double p) {
  require_probability(p, "p");
  return RiskFunction(estimator)(p);
}

double bayes_risk(const Estimator& estimator, const DiscretePrior& prior) {
  const RiskFunction risk(estimator);
  double out = 0.0;
  for (const auto& s : prior.support()) out += s.weight * risk(s.point);
  return out;
}

RiskMaximum RiskProfile::global_max() const {
  RiskMaximum best{0.0, -1.0};
  for (const auto& m : maxima) {
    if (m.risk > best.risk) best = m;
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (values[i] > best.risk) best = {grid[i], values[i]};
  }
  return best;
}

std::vector<double> risk_grid(int trials, int size) {
  size = std::max(size, 3);
  // Build [0, 1/2] and mirror it, so p and 1 - p are both exact grid points.
  std::vector<double> half;
  half.reserve(static_cast<std::size_t>(size) / 2 + 400);
  for (int i = 0; 2 * i <= size - 1; ++i) half.push_back(static_cast<double>(i) / (size - 1));

  auto add_layer = [&](double width, int points) {
    width = std::min(width, 0.5);
    for (int i = 1; i <= points; ++i) half.push_back(width * i / points);
  };
  add_layer(4.0 / std::sqrt(static_cast<double>(trials)), std::max(size / 5, 100));
  add_layer(4.0 / trials, 100);

  std::sort(half.begin(), half.end());
  // Layer points can land an ulp away from uniform ones. Keep the larger of
  // each close pair so that 1/2 itself survives.
  std::vector<double> grid;
  for (std::size_t i = 0; i < half.size(); ++i) {
    if (i + 1 < half.size() && half[i + 1] - half[i] < 1e-12) continue;
    grid.push_back(half[i]);
  }
  half = grid;
  for (auto it = half.rbegin(); it != half.rend(); ++it) {
    if (*it < 0.5) grid.push_back(1.0 - *it);
  }
  return grid;
}

std::vector<RiskMaximum> refine_maxima(const RiskFunction& risk, const std::vector<double>& grid,
                                       const std::vector<double>& values) {
  const std::size_t size = grid.size();
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < size; ++i) {
    const double left = i > 0 ? values[i - 1] : -1.0;
    const double right = i + 1 < size ? values[i + 1] : -1.0;
    if (values[i] >= left && values[i] >= right && (values[i] > left || values[i] > right)) {
      peaks.push_back(i);
    }
  }
  std::vector<RiskMaximum> out(peaks.size());
  numeric::parallel_for(peaks.size(), [&](std::size_t k) {
    const std::size_t i = peaks[k];
    RiskMaximum best{grid[i], values[i]};
    if (!std::isinf(values[i])) {
      const double lo = grid[i > 0 ? i - 1 : 0];
      const double hi = grid[i + 1 < size ? i + 1 : i];
      const auto refined = numeric::maximize([&](double p) { return risk(p); }, lo, hi);
      if (refined.value > best.risk) best = {refined.x, refined.value};
    }
    out[k] = best;
  });
  return out;
}

RiskProfile risk_profile(const Estimator& estimator, int grid_size) {
  RiskProfile profile{estimator.model(), estimator.label(), risk_grid(estimator.model().trials(), grid_size),
                      {}, {}};
  const RiskFunction risk(estimator);
  profile.values.resize(profile.grid.size());
  numeric::parallel_for(profile.grid.size(),
                        [&](std::size_t i) { profile.values[i] = risk(profile.grid[i]); });
  profile.maxima = refine_maxima(risk, profile.grid, profile.values);
  return profile;
}

RiskMaximum max_risk(const Estimator& estimator, int grid_size) {
  for (double v : estimator.estimates()) {
    if (v <= 0.0 || v >= 1.0) return {0.5, kInfiniteRisk};
  }
  return risk_profile(estimator, grid_size).global_max();
}

}  // namespace noisycoin
