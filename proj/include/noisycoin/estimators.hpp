#pragma once

#include <span>
#include <string>
#include <vector>

#include "noisycoin/model.hpp"

namespace noisycoin {

/// Hedging exponent beta > 0 (also the Beta(beta, beta) prior parameter).
class HedgingParam {
 public:
  explicit HedgingParam(double beta);
  double value() const { return beta_; }

 private:
  double beta_;
};

struct SupportPoint {
  double point;
  double weight;
};

/// Prior with finitely many atoms. Points are distinct, sorted ascending and
/// inside [0, 1]; weights are positive and sum to one.
class DiscretePrior {
 public:
  /// Validates without rescaling: weights must already sum to 1 within 1e-12.
  explicit DiscretePrior(std::vector<SupportPoint> support);

  /// Rescales positive weights to sum to one, then validates.
  static DiscretePrior normalized(std::vector<SupportPoint> support);

  std::span<const SupportPoint> support() const { return support_; }
  std::size_t size() const { return support_.size(); }

  /// True if the atom set is invariant under p -> 1 - p to within tol.
  bool symmetric(double tol = 1e-12) const;

 private:
  std::vector<SupportPoint> support_;
};

/// An estimator tabulated over every possible count n = 0..N.
class Estimator {
 public:
  /// Entries must lie in [0, 1] unless `unconstrained` is set.
  Estimator(TrialModel model, std::vector<double> estimates, std::string label,
            bool unconstrained = false);

  const TrialModel& model() const { return model_; }
  std::span<const double> estimates() const { return estimates_; }
  double operator()(int n) const { return estimates_[static_cast<std::size_t>(n)]; }
  const std::string& label() const { return label_; }
  bool unconstrained() const { return unconstrained_; }

 private:
  TrialModel model_;
  std::vector<double> estimates_;
  std::string label_;
  bool unconstrained_;
};

// Pointwise rules. Each validates its count against the model.

double linear_inversion(const TrialModel& model, int n);
double maximum_likelihood(const TrialModel& model, int n);
/// (n + beta) / (N + 2 beta). Noiseless models only.
double add_beta(const TrialModel& model, HedgingParam beta, int n);
/// Braess-Sauer piecewise rule. Noiseless models with N >= 2 only.
double braess(const TrialModel& model, int n);
/// Maximizer of p^beta (1-p)^beta L(p) on [0, 1].
double hedged_ml(const TrialModel& model, HedgingParam beta, int n);

/// The cubic in q whose root in [alpha, 1 - alpha] defines hedged_ml.
double hml_cubic(const TrialModel& model, HedgingParam beta, int n, double q);

// Full tables.

Estimator linear_inversion_table(const TrialModel& model);
Estimator maximum_likelihood_table(const TrialModel& model);
Estimator add_beta_table(const TrialModel& model, HedgingParam beta);
Estimator braess_table(const TrialModel& model);
Estimator hedged_ml_table(const TrialModel& model, HedgingParam beta);

/// Posterior mean under a discrete prior. Throws std::domain_error naming the
/// count if some n has zero likelihood under every atom.
Estimator bayes_mean_discrete(const TrialModel& model, const DiscretePrior& prior);

/// Posterior mean under a Beta(beta, beta) prior. Closed form when noiseless,
/// otherwise Gauss-Legendre quadrature of doubling order (200 up to 3200)
/// until successive orders agree to 1e-10 relative.
Estimator bayes_mean_beta(const TrialModel& model, double beta_prior_param);

}  // namespace noisycoin
