#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "noisycoin/model.hpp"
#include "oracles.hpp"

using namespace noisycoin;

TEST_CASE("model construction rejects invalid parameters") {
  CHECK_THROWS_AS(TrialModel(0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(TrialModel(10, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(TrialModel(10, -0.01), std::invalid_argument);
  CHECK_THROWS_AS(TrialModel(10, std::nan("")), std::invalid_argument);
  CHECK_NOTHROW(TrialModel(1, 0.0));
  CHECK_NOTHROW(TrialModel(10, 0.499));
}

TEST_CASE("effective_prob examples") {
  CHECK(oracle::rel(effective_prob(TrialModel(10, 0.0), 0.3), 0.3) <= 1e-15);
  CHECK(oracle::rel(effective_prob(TrialModel(10, 0.25), 0.5), 0.5) <= 1e-15);
  CHECK(oracle::rel(effective_prob(TrialModel(10, 0.1), 0.0), 0.1) <= 1e-15);
  CHECK_THROWS_AS(effective_prob(TrialModel(10, 0.1), 1.5), std::invalid_argument);
}

TEST_CASE("invert_effective_prob examples") {
  CHECK(oracle::rel(invert_effective_prob(TrialModel(10, 0.25), 0.5), 0.5) <= 1e-15);
  CHECK(oracle::rel(invert_effective_prob(TrialModel(10, 0.25), 0.0), -0.5) <= 1e-15);
  CHECK(oracle::rel(invert_effective_prob(TrialModel(10, 0.0), 0.7), 0.7) <= 1e-15);
}

TEST_CASE("pmf examples") {
  CHECK(oracle::rel(pmf(TrialModel(2, 0.1), 0.0, 0), 0.81) <= 1e-14);
  CHECK(oracle::rel(pmf(TrialModel(2, 0.1), 0.0, 1), 0.18) <= 1e-14);
  CHECK(pmf(TrialModel(1, 0.0), 1.0, 1) == 1.0);
  CHECK(pmf(TrialModel(1, 0.0), 1.0, 0) == 0.0);
  CHECK_THROWS_AS(pmf(TrialModel(5, 0.1), 0.5, 6), std::invalid_argument);
}

TEST_CASE("log_likelihood examples") {
  CHECK(log_likelihood(TrialModel(10, 0.0), 0, 0.0) == 0.0);
  const double minus_inf = log_likelihood(TrialModel(10, 0.0), 1, 0.0);
  CHECK(std::isinf(minus_inf));
  CHECK(minus_inf < 0.0);
  CHECK(oracle::rel(log_likelihood(TrialModel(4, 0.1), 2, 0.5), 4.0 * std::log(0.5)) <= 1e-15);
  CHECK(log_likelihood(TrialModel(10, 0.0), 10, 1.0) == 0.0);
}

TEST_CASE("pmf sums to one") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> trials(1, 200);
  std::uniform_real_distribution<double> noise(0.0, 0.4999);
  std::uniform_real_distribution<double> prob(0.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    const TrialModel model(trials(rng), noise(rng));
    const double p = prob(rng);
    double total = 0.0;
    for (int n = 0; n <= model.trials(); ++n) total += pmf(model, p, n);
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("pmf mirror symmetry") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> trials(1, 200);
  std::uniform_real_distribution<double> noise(0.0, 0.4999);
  std::uniform_real_distribution<double> prob(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const TrialModel model(trials(rng), noise(rng));
    const double p = prob(rng);
    for (int n = 0; n <= model.trials(); ++n) {
      const double a = pmf(model, p, n);
      const double b = pmf(model, 1.0 - p, model.trials() - n);
      // 1 - p is rounded, so compare in log space relative to the scale set
      // by that rounding.
      const double tol = 1e-15 * std::max(a, b) * (1.0 + model.trials() * 4.0 / std::min(p, 1.0 - p));
      CHECK(std::abs(a - b) <= std::max(tol, 1e-300));
    }
  }
  // Exactly representable mirrors.
  const TrialModel model(30, 0.125);
  for (int n = 0; n <= 30; ++n) {
    CHECK(oracle::rel(pmf(model, 0.25, n), pmf(model, 0.75, 30 - n)) <= 1e-15);
  }
}

TEST_CASE("effective_prob round trip and monotonicity") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> noise(0.0, 0.4999);
  std::uniform_real_distribution<double> prob(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const TrialModel model(10, noise(rng));
    const double p = prob(rng);
    // Rounding q costs half an ulp, which the inversion divides by 1 - 2 alpha.
    const double tol = std::max(1e-14, 2.3e-16 / (1.0 - 2.0 * model.noise()));
    CHECK(std::abs(invert_effective_prob(model, effective_prob(model, p)) - p) <= tol);
    if (model.noise() <= 0.49) CHECK(std::abs(invert_effective_prob(model, effective_prob(model, p)) - p) <= 1e-14);
    const double p2 = std::min(1.0, p + 1e-6);
    if (p2 > p) CHECK(effective_prob(model, p2) > effective_prob(model, p));
    const double q = effective_prob(model, p);
    CHECK(q >= model.noise());
    CHECK(q <= 1.0 - model.noise());
  }
}

TEST_CASE("pmf agrees with exact rational arithmetic") {
  using oracle::Rational;
  const std::vector<std::pair<int, int>> alphas = {{0, 1}, {1, 10}, {1, 4}, {3, 7}};
  const std::vector<std::pair<int, int>> probs = {{0, 1}, {1, 1}, {1, 3}, {1, 2}, {7, 9}, {1, 1000}};
  for (int trials : {1, 2, 5, 17, 30}) {
    for (const auto& [an, ad] : alphas) {
      for (const auto& [pn, pd] : probs) {
        const Rational alpha(an, ad);
        const Rational p(pn, pd);
        const TrialModel model(trials, static_cast<double>(an) / ad);
        for (int n = 0; n <= trials; ++n) {
          const double exact = static_cast<double>(oracle::exact_pmf(trials, alpha, p, n));
          const double got = pmf(model, static_cast<double>(pn) / pd, n);
          if (exact == 0.0) {
            CHECK(got == 0.0);
          } else {
            CHECK(std::abs(got - exact) <= 1e-12 * exact);
          }
        }
      }
    }
  }
}

TEST_CASE("pmf stays finite for very large N") {
  const TrialModel model(1'000'000, 0.01);
  double total = 0.0;
  for (int n = 0; n <= model.trials(); n += 1) total += pmf(model, 0.3, n);
  CHECK(oracle::rel(total, 1.0) <= 1e-10);
  CHECK(std::isfinite(log_pmf(model, 0.3, 0)));
}

TEST_CASE("CountDistribution window matches pmf") {
  const TrialModel model(500, 0.05);
  const CountDistribution dist(model);
  std::vector<double> mass(501, -1.0);
  const auto w = dist.fill(0.2, mass);
  CHECK(w.first <= w.last);
  for (int n = w.first; n <= w.last; ++n) {
    CHECK(oracle::rel(mass[static_cast<std::size_t>(n)], pmf(model, 0.2, n)) <= 1e-13);
  }
  std::vector<double> logs(501);
  dist.fill_log(0.2, logs);
  CHECK(oracle::rel(logs[100], log_pmf(model, 0.2, 100)) <= 1e-13);
}
