// Acceptance run: one PASS/FAIL line per criterion. Criteria listed with
// --expect-fail are reported as expected failures; the exit status is zero
// when every outcome matches its expectation.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "noisycoin/bounds.hpp"
#include "noisycoin/estimators.hpp"
#include "noisycoin/lfp.hpp"
#include "noisycoin/risk.hpp"
#include "noisycoin/tuning.hpp"
#include "oracles.hpp"

using namespace noisycoin;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::function<Verdict()> check;
};

// Least-squares slope of log R against log N, negated.
double decay_exponent(const std::vector<int>& trials, const std::vector<double>& risks) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const double x = std::log(trials[i]);
    const double y = std::log(risks[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return -(k * sxy - sx * sy) / (k * sxx - sx * sx);
}

Verdict noiseless_sandwich() {
  const TrialModel model(100, 0.0);
  const double r = max_risk(add_beta_table(model, HedgingParam(0.5))).risk;
  const double lo = 1.0 / 200.0;
  const double hi = 1.15 * 0.509 / 100.0;
  return {r >= lo && r <= hi, fmt::format("max risk {:.6g} in [{:.6g}, {:.6g}]", r, lo, hi)};
}

Verdict hml_reduction() {
  double worst = 0.0;
  for (int N : {2, 10, 100, 500}) {
    const TrialModel model(N, 0.0);
    for (double b : {0.04, 0.5, 1.0}) {
      for (int n = 0; n <= N; ++n) {
        const double want = (n + b) / (N + 2 * b);
        worst = std::max(worst, std::abs(hedged_ml(model, HedgingParam(b), n) - want));
      }
    }
  }
  return {worst <= 1e-10, fmt::format("largest deviation {:.3g}", worst)};
}

Verdict lfp_convergence() {
  bool pass = true;
  std::string detail;
  for (double a : {0.1, 0.25}) {
    const auto r = lfp_search(TrialModel(100, a));
    double worst = 0.0;
    for (const auto& s : r.prior.support()) {
      worst = std::max(worst, oracle::rel(pointwise_risk(r.estimator, s.point), r.max_risk));
    }
    pass = pass && r.converged && r.duality_gap <= 1e-6 && worst <= 1e-5;
    detail += fmt::format("alpha={} gap={:.3g} support deviation={:.3g}; ", a, r.duality_gap, worst);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Verdict noisy_scaling() {
  const std::vector<int> trials = {100, 400, 1600};
  std::vector<double> noisy;
  std::vector<double> clean;
  bool converged = true;
  for (int N : trials) {
    const auto a = lfp_search(TrialModel(N, 0.1));
    const auto b = lfp_search(TrialModel(N, 0.0));
    converged = converged && a.converged && b.converged;
    noisy.push_back(a.max_risk);
    clean.push_back(b.max_risk);
  }
  const double g_noisy = decay_exponent(trials, noisy);
  const double g_clean = decay_exponent(trials, clean);
  const bool pass = converged && g_noisy >= 0.4 && g_noisy <= 0.6 && g_clean >= 0.85 && g_clean <= 1.1;
  return {pass, fmt::format("gamma(alpha=0.1)={:.4f} gamma(alpha=0)={:.4f}", g_noisy, g_clean)};
}

Verdict bimodal_dominance() {
  const TrialModel model(100, 0.1);
  const auto minimax = lfp_search(model);
  std::vector<double> anchors;
  for (int i = 0; i <= 100; ++i) anchors.push_back(i / 100.0);
  double top = 0.0;
  for (const auto& r : bimodal_profile(model, anchors)) top = std::max(top, r.risk);
  const bool pass = minimax.converged && top <= minimax.max_risk * (1.0 + 1e-4);
  return {pass, fmt::format("max R2 {:.6g}, minimax {:.6g}", top, minimax.max_risk)};
}

Verdict interior_superiority() {
  const TrialModel model(100, 0.25);
  const auto minimax = lfp_search(model);
  const auto hml = hedged_ml_table(model, HedgingParam(optimal_beta(model).beta()));
  const double h = pointwise_risk(hml, 0.5);
  const double m = pointwise_risk(minimax.estimator, 0.5);
  return {minimax.converged && 3.0 * h <= m, fmt::format("R(1/2): hml {:.6g}, minimax {:.6g}, ratio {:.3f}", h, m, m / h)};
}

Verdict beta_asymptote() {
  const double b = optimal_beta(TrialModel(1 << 14, 0.01)).beta();
  return {std::abs(b - 0.0389) <= 0.01, fmt::format("beta at N=2^14 is {:.5f}", b)};
}

Verdict boundary_asymptote() {
  bool pass = true;
  std::string detail;
  for (int k : {12, 14}) {
    const int N = 1 << k;
    const double scaled = optimal_beta(TrialModel(N, 0.01)).at.risk_at_zero * std::sqrt(N);
    pass = pass && scaled >= 0.175 && scaled <= 0.325;
    detail += fmt::format("R(0) sqrt(N) at 2^{} is {:.4f}; ", k, scaled);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Verdict oracle_equivalence() {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> trials(1, 10000);
  std::uniform_real_distribution<double> noise(0.0, 0.49);
  std::uniform_real_distribution<double> log_beta(std::log(1e-3), std::log(2.0));
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int N = trials(rng);
    const double a = noise(rng);
    const double b = std::exp(log_beta(rng));
    const int n = std::uniform_int_distribution<int>(0, N)(rng);
    const double got = hedged_ml(TrialModel(N, a), HedgingParam(b), n);
    worst = std::max(worst, std::abs(got - oracle::hedged_argmax(N, a, b, n)));
  }
  return {worst <= 1e-8, fmt::format("largest deviation over 1000 instances {:.3g}", worst)};
}

Verdict kl_series() {
  const double eps = 1e-4;
  bool pass = true;
  std::string detail;
  for (double p : {0.1, 0.3, 0.5}) {
    const double ratio = kl_bernoulli(p + eps, p) * 2 * p * (1 - p) / (eps * eps);
    pass = pass && ratio >= 0.99 && ratio <= 1.01;
    detail += fmt::format("p={} ratio {:.6f}; ", p, ratio);
  }
  const double edge = kl_bernoulli(eps, 0.0) / eps;
  pass = pass && edge >= 0.99 && edge <= 1.01;
  detail += fmt::format("boundary ratio {:.6f}", edge);
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> expect_fail;
  std::vector<int> only;
  CLI::App app{"Acceptance criteria"};
  app.add_option("--expect-fail", expect_fail, "Criteria known to fail");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> expected(expect_fail.begin(), expect_fail.end());
  const std::set<int> selected(only.begin(), only.end());

  const std::vector<Criterion> criteria = {
      {1, "noiseless minimax sandwich", noiseless_sandwich},
      {2, "hml reduces to add-beta without noise", hml_reduction},
      {3, "lfp convergence", lfp_convergence},
      {4, "noisy scaling exponent", noisy_scaling},
      {5, "bimodal bound below minimax", bimodal_dominance},
      {6, "hml beats minimax in the interior", interior_superiority},
      {7, "optimal beta asymptote", beta_asymptote},
      {8, "boundary risk asymptote", boundary_asymptote},
      {9, "hml matches golden-section oracle", oracle_equivalence},
      {10, "kl series expansions", kl_series},
  };

  int mismatches = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    const Verdict v = c.check();
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool want_fail = expected.count(c.id) > 0;
    if (v.pass == want_fail) ++mismatches;
    std::string label = v.pass ? "PASS" : "FAIL";
    if (want_fail) label += v.pass ? " (unexpected)" : " (expected)";
    fmt::print("{} {:2d} {}: {} [{:.1f}s]\n", label, c.id, c.name, v.detail, seconds);
    std::fflush(stdout);
  }
  return mismatches == 0 ? 0 : 1;
}
