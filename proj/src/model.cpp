#include "noisycoin/model.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace noisycoin {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Mass below this fraction of the modal mass is treated as zero by fill().
constexpr double kWindowCutoff = 1e-32;

double log_choose_direct(int trials, int n) {
  return std::lgamma(trials + 1.0) - std::lgamma(n + 1.0) - std::lgamma(trials - n + 1.0);
}

// Binomial mass without the cancellation of differencing log-gammas.
double binomial_mass(int trials, int n, double q) {
  return boost::math::pdf(boost::math::binomial_distribution<double>(trials, q), n);
}

double log_kernel(int trials, int n, double q) {
  double out = 0.0;
  if (n > 0) out += (q == 0.0) ? kNegInf : n * std::log(q);
  if (trials - n > 0) out += (q == 1.0) ? kNegInf : (trials - n) * std::log1p(-q);
  return out;
}

}  // namespace

TrialModel::TrialModel(int trials, double noise) : trials_(trials), noise_(noise) {
  if (trials < 1) {
    throw std::invalid_argument("trials must be >= 1, got " + std::to_string(trials));
  }
  if (!(noise >= 0.0 && noise < 0.5)) {
    throw std::invalid_argument("noise must lie in [0, 1/2), got " + std::to_string(noise));
  }
}

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

void require_count(const TrialModel& model, int n) {
  if (n < 0 || n > model.trials()) {
    throw std::invalid_argument("count must lie in [0, " + std::to_string(model.trials()) +
                                "], got " + std::to_string(n));
  }
}

double effective_prob(const TrialModel& model, double p) {
  require_probability(p, "p");
  const double a = model.noise();
  return a + p * (1.0 - 2.0 * a);
}

double invert_effective_prob(const TrialModel& model, double q) {
  const double a = model.noise();
  return (q - a) / (1.0 - 2.0 * a);
}

double log_pmf(const TrialModel& model, double p, int n) {
  require_probability(p, "p");
  require_count(model, n);
  const double q = effective_prob(model, p);
  const double mass = binomial_mass(model.trials(), n, q);
  if (mass >= std::numeric_limits<double>::min()) return std::log(mass);
  return log_choose_direct(model.trials(), n) + log_kernel(model.trials(), n, q);
}

double pmf(const TrialModel& model, double p, int n) {
  require_probability(p, "p");
  require_count(model, n);
  return binomial_mass(model.trials(), n, effective_prob(model, p));
}

double log_likelihood(const TrialModel& model, int n, double p) {
  require_probability(p, "p");
  require_count(model, n);
  return log_kernel(model.trials(), n, effective_prob(model, p));
}

CountDistribution::CountDistribution(const TrialModel& model)
    : model_(model), log_choose_(static_cast<std::size_t>(model.trials()) + 1) {
  const int trials = model.trials();
  for (int n = 0; n <= trials; ++n) log_choose_[n] = log_choose_direct(trials, n);
}

CountDistribution::Window CountDistribution::fill(double p, std::span<double> mass) const {
  const int trials = model_.trials();
  const double q = effective_prob(model_, p);
  if (q <= 0.0) {
    mass[0] = 1.0;
    return {0, 0};
  }
  if (q >= 1.0) {
    mass[trials] = 1.0;
    return {trials, trials};
  }

  int mode = static_cast<int>(std::floor((trials + 1) * q));
  if (mode > trials) mode = trials;
  const double peak = binomial_mass(trials, mode, q);
  const double cutoff = kWindowCutoff * peak;
  mass[mode] = peak;

  const double odds = q / (1.0 - q);
  int last = mode;
  while (last < trials) {
    const double next = mass[last] * odds * (trials - last) / (last + 1.0);
    if (next < cutoff) break;
    mass[++last] = next;
  }
  int first = mode;
  while (first > 0) {
    const double next = mass[first] / odds * first / (trials - first + 1.0);
    if (next < cutoff) break;
    mass[--first] = next;
  }
  return {first, last};
}

void CountDistribution::fill_log(double p, std::span<double> log_mass) const {
  const int trials = model_.trials();
  const double q = effective_prob(model_, p);
  if (q <= 0.0 || q >= 1.0) {
    for (int n = 0; n <= trials; ++n) log_mass[n] = log_choose_[n] + log_kernel(trials, n, q);
    return;
  }
  const double log_q = std::log(q);
  const double log_not_q = std::log1p(-q);
  for (int n = 0; n <= trials; ++n) {
    log_mass[n] = log_choose_[n] + n * log_q + (trials - n) * log_not_q;
  }
}

}  // namespace noisycoin
