#pragma once

#include <span>
#include <vector>

namespace noisycoin {

/// N coin flips, each recorded outcome flipped with probability alpha.
class TrialModel {
 public:
  /// Throws std::invalid_argument unless trials >= 1 and 0 <= noise < 1/2.
  TrialModel(int trials, double noise);

  int trials() const { return trials_; }
  double noise() const { return noise_; }
  bool noiseless() const { return noise_ == 0.0; }

  friend bool operator==(const TrialModel&, const TrialModel&) = default;

 private:
  int trials_;
  double noise_;
};

/// Throws std::invalid_argument if p is not in [0, 1] (NaN included).
void require_probability(double p, const char* what);
/// Throws std::invalid_argument if n is not in [0, N].
void require_count(const TrialModel& model, int n);

/// q = alpha + p (1 - 2 alpha), the probability of recording heads.
double effective_prob(const TrialModel& model, double p);

/// (q - alpha) / (1 - 2 alpha). Not clipped.
double invert_effective_prob(const TrialModel& model, double q);

double log_pmf(const TrialModel& model, double p, int n);
double pmf(const TrialModel& model, double p, int n);

/// n ln q + (N - n) ln(1 - q), with 0 ln 0 = 0. May be -infinity.
double log_likelihood(const TrialModel& model, int n, double p);

/// Binomial masses of the recorded count for a fixed model. Holds the log
/// binomial coefficients so repeated evaluation over many p is cheap.
class CountDistribution {
 public:
  /// Inclusive range of counts whose mass was written.
  struct Window {
    int first;
    int last;
  };

  explicit CountDistribution(const TrialModel& model);

  const TrialModel& model() const { return model_; }
  double log_choose(int n) const { return log_choose_[static_cast<std::size_t>(n)]; }

  /// Writes Pr(n | p) into mass[n] for every n whose mass exceeds 1e-32 of
  /// the modal mass and returns that window. Entries outside are untouched.
  /// mass.size() must be at least N + 1.
  Window fill(double p, std::span<double> mass) const;

  /// Log masses for every n, -infinity where the mass is exactly zero.
  void fill_log(double p, std::span<double> log_mass) const;

 private:
  TrialModel model_;
  std::vector<double> log_choose_;
};

}  // namespace noisycoin
