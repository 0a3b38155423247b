#include "noisycoin/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "noisycoin/numeric.hpp"
#include "noisycoin/risk.hpp"

namespace noisycoin {

namespace {

// Masses of both atoms over the union of their count windows.
class PairMasses {
 public:
  explicit PairMasses(const CountDistribution& dist)
      : dist_(dist),
        anchor_(static_cast<std::size_t>(dist.model().trials()) + 1),
        other_(anchor_.size()) {}

  void set_anchor(double p) {
    std::fill(anchor_.begin(), anchor_.end(), 0.0);
    anchor_window_ = dist_.fill(p, anchor_);
  }
  void set_other(double p) {
    std::fill(other_.begin(), other_.end(), 0.0);
    other_window_ = dist_.fill(p, other_);
  }

  // Bayes risk of {w at a, 1 - w at b} under the two-term posterior mean.
  double risk(double a, double b, double w) const {
    if (w <= 0.0 || w >= 1.0 || a == b) return 0.0;
    const int first = std::min(anchor_window_.first, other_window_.first);
    const int last = std::max(anchor_window_.last, other_window_.last);
    double total = 0.0;
    for (int n = first; n <= last; ++n) {
      const double la = w * anchor_[n];
      const double lb = (1.0 - w) * other_[n];
      const double den = la + lb;
      if (den == 0.0) continue;
      // Posterior mean and its complement as logs, so a faint atom whose
      // share underflows still gets a finite divergence.
      const double log_den = std::log(den);
      const double log_est = log_mix(la, a, lb, b) - log_den;
      const double log_rest = log_mix(la, 1.0 - a, lb, 1.0 - b) - log_den;
      if (la > 0.0) total += la * divergence(log_est, log_rest, a);
      if (lb > 0.0) total += lb * divergence(log_est, log_rest, b);
    }
    return std::max(0.0, total);
  }

 private:
  // ln(la x + lb y) for nonnegative terms, robust to underflow of either.
  static double log_mix(double la, double x, double lb, double y) {
    const double direct = la * x + lb * y;
    if (direct > 1e-280) return std::log(direct);
    const double lx = la > 0.0 && x > 0.0 ? std::log(la) + std::log(x) : -kInfiniteRisk;
    const double ly = lb > 0.0 && y > 0.0 ? std::log(lb) + std::log(y) : -kInfiniteRisk;
    const double top = std::max(lx, ly);
    if (top == -kInfiniteRisk) return top;
    return top + std::log(std::exp(lx - top) + std::exp(ly - top));
  }

  static double divergence(double log_est, double log_rest, double truth) {
    double out = 0.0;
    if (truth > 0.0) out += truth * (std::log(truth) - log_est);
    if (truth < 1.0) out += (1.0 - truth) * (std::log1p(-truth) - log_rest);
    return out;
  }

  const CountDistribution& dist_;
  std::vector<double> anchor_;
  std::vector<double> other_;
  CountDistribution::Window anchor_window_{0, -1};
  CountDistribution::Window other_window_{0, -1};
};

struct Cell {
  double weight;
  double other;
  double risk;
};

BimodalResult solve(const CountDistribution& dist, const std::vector<double>& other_grid,
                    double anchor, const BimodalOptions& options) {
  const int steps = std::max(options.weight_steps, 3);
  std::vector<double> weights;
  for (int k = 1; k < steps - 1; ++k) weights.push_back(static_cast<double>(k) / (steps - 1));

  PairMasses masses(dist);
  masses.set_anchor(anchor);
  std::vector<Cell> cells;
  cells.reserve(other_grid.size() * weights.size());
  for (double other : other_grid) {
    masses.set_other(other);
    for (double w : weights) cells.push_back({w, other, masses.risk(anchor, other, w)});
  }
  const std::size_t starts = std::min<std::size_t>(std::max(options.refine_starts, 1), cells.size());
  std::partial_sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(starts), cells.end(),
                    [](const Cell& a, const Cell& b) { return a.risk > b.risk; });

  auto objective = [&](const std::vector<double>& x) {
    const double w = std::clamp(x[0], 0.0, 1.0);
    const double other = std::clamp(x[1], 0.0, 1.0);
    masses.set_other(other);
    return -masses.risk(anchor, other, w);
  };

  Cell best{1.0, anchor, 0.0};
  for (std::size_t s = 0; s < starts; ++s) {
    if (cells[s].risk > best.risk) best = cells[s];
    const auto it = std::lower_bound(other_grid.begin(), other_grid.end(), cells[s].other);
    double spacing = 1e-3;
    if (it != other_grid.end() && it + 1 != other_grid.end()) spacing = *(it + 1) - *it;
    numeric::NelderMeadOptions nm;
    nm.max_evaluations = 600;
    const auto refined = numeric::nelder_mead(objective, {cells[s].weight, cells[s].other},
                                              {0.5 / (steps - 1), std::max(spacing, 1e-6)}, nm);
    const double w = std::clamp(refined.x[0], 0.0, 1.0);
    const double other = std::clamp(refined.x[1], 0.0, 1.0);
    if (-refined.value > best.risk) best = {w, other, -refined.value};
  }
  // Report exactly what the witness reproduces.
  masses.set_other(best.other);
  const double risk = masses.risk(anchor, best.other, best.weight);
  return {anchor, risk, best.weight, best.other, static_cast<int>(other_grid.size())};
}

}  // namespace

double two_point_bayes_risk(const TrialModel& model, double anchor, double other, double weight) {
  require_probability(anchor, "anchor");
  require_probability(other, "other");
  require_probability(weight, "weight");
  const CountDistribution dist(model);
  PairMasses masses(dist);
  masses.set_anchor(anchor);
  masses.set_other(other);
  return masses.risk(anchor, other, weight);
}

BimodalResult bimodal_risk(const TrialModel& model, double anchor, const BimodalOptions& options) {
  require_probability(anchor, "anchor");
  const CountDistribution dist(model);
  return solve(dist, risk_grid(model.trials(), options.coarse_grid), anchor, options);
}

std::vector<BimodalResult> bimodal_profile(const TrialModel& model, const std::vector<double>& anchors,
                                           const BimodalOptions& options) {
  for (double a : anchors) require_probability(a, "anchor");
  const CountDistribution dist(model);
  const auto grid = risk_grid(model.trials(), options.coarse_grid);
  std::vector<BimodalResult> out(anchors.size());
  numeric::parallel_for(anchors.size(),
                        [&](std::size_t i) { out[i] = solve(dist, grid, anchors[i], options); });
  return out;
}

}  // namespace noisycoin
