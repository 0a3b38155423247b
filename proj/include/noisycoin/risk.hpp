#pragma once

#include <limits>
#include <string>
#include <vector>

#include "noisycoin/estimators.hpp"
#include "noisycoin/model.hpp"

namespace noisycoin {

inline constexpr double kInfiniteRisk = std::numeric_limits<double>::infinity();
inline constexpr int kDefaultGridSize = 2001;

/// Relative entropy from truth to estimate, in nats:
/// p ln(p / p_hat) + (1 - p) ln((1 - p) / (1 - p_hat)), with 0 ln 0 = 0.
double kl_bernoulli(double estimate, double truth);

/// p -> expected KL risk of a fixed estimator. Holds per-count log tables so
/// that repeated evaluation (grids, optimizers) costs one pass over the
/// count window. Safe to call concurrently.
class RiskFunction {
 public:
  explicit RiskFunction(const Estimator& estimator);

  const TrialModel& model() const { return dist_.model(); }

  double operator()(double p) const;
  /// dR/dp for p in (0, 1).
  double derivative(double p) const;

 private:
  CountDistribution dist_;
  std::vector<double> log_est_;      // ln p_hat(n)
  std::vector<double> log_not_est_;  // ln(1 - p_hat(n))
};

double pointwise_risk(const Estimator& estimator, double p);
double bayes_risk(const Estimator& estimator, const DiscretePrior& prior);

struct RiskMaximum {
  double p;
  double risk;
};

struct RiskProfile {
  TrialModel model;
  std::string label;
  std::vector<double> grid;
  std::vector<double> values;
  /// Local maxima refined off the grid, ascending in p.
  std::vector<RiskMaximum> maxima;

  RiskMaximum global_max() const;
};

/// Uniform grid of `size` points on [0, 1] merged with extra layers on
/// [0, 4/sqrt(N)] and [0, 4/N] (and their mirrors) where the boundary peak
/// lives. Sorted, both endpoints included.
std::vector<double> risk_grid(int trials, int size = kDefaultGridSize);

RiskProfile risk_profile(const Estimator& estimator, int grid_size = kDefaultGridSize);

/// Global maximum of the pointwise risk. Estimators touching 0 or 1 return
/// +infinity immediately with witness p = 1/2.
RiskMaximum max_risk(const Estimator& estimator, int grid_size = kDefaultGridSize);

/// Local maxima of an already tabulated profile, each refined by a bounded
/// scalar search between its grid neighbours.
std::vector<RiskMaximum> refine_maxima(const RiskFunction& risk, const std::vector<double>& grid,
                                       const std::vector<double>& values);

}  // namespace noisycoin
