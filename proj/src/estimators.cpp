#include "noisycoin/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "noisycoin/numeric.hpp"

namespace noisycoin {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_noiseless(const TrialModel& model, const char* rule, const char* alternative) {
  if (!model.noiseless()) {
    throw std::invalid_argument(std::string(rule) + " is only defined for noiseless data (alpha = 0); "
                                "use " + alternative + " when alpha > 0");
  }
}

template <class Rule>
std::vector<double> tabulate(const TrialModel& model, Rule rule) {
  std::vector<double> out(static_cast<std::size_t>(model.trials()) + 1);
  for (int n = 0; n <= model.trials(); ++n) out[n] = rule(n);
  return out;
}

std::string format_param(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

HedgingParam::HedgingParam(double beta) : beta_(beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("beta must be a finite positive number, got " + std::to_string(beta));
  }
}

DiscretePrior::DiscretePrior(std::vector<SupportPoint> support) : support_(std::move(support)) {
  if (support_.empty()) throw std::invalid_argument("prior needs at least one support point");
  std::sort(support_.begin(), support_.end(),
            [](const SupportPoint& a, const SupportPoint& b) { return a.point < b.point; });
  double total = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    require_probability(support_[i].point, "support point");
    if (!(support_[i].weight > 0.0)) {
      throw std::invalid_argument("prior weights must be strictly positive");
    }
    if (i > 0 && support_[i].point == support_[i - 1].point) {
      throw std::invalid_argument("prior support points must be distinct");
    }
    total += support_[i].weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("prior weights must sum to 1, got " + std::to_string(total));
  }
}

DiscretePrior DiscretePrior::normalized(std::vector<SupportPoint> support) {
  double total = 0.0;
  for (const auto& s : support) total += s.weight;
  if (!(total > 0.0)) throw std::invalid_argument("prior weights must be strictly positive");
  for (auto& s : support) s.weight /= total;
  return DiscretePrior(std::move(support));
}

bool DiscretePrior::symmetric(double tol) const {
  const std::size_t k = support_.size();
  for (std::size_t i = 0; i < k; ++i) {
    const auto& lo = support_[i];
    const auto& hi = support_[k - 1 - i];
    if (std::abs(lo.point - (1.0 - hi.point)) > tol) return false;
    if (std::abs(lo.weight - hi.weight) > tol) return false;
  }
  return true;
}

Estimator::Estimator(TrialModel model, std::vector<double> estimates, std::string label,
                     bool unconstrained)
    : model_(model),
      estimates_(std::move(estimates)),
      label_(std::move(label)),
      unconstrained_(unconstrained) {
  if (estimates_.size() != static_cast<std::size_t>(model_.trials()) + 1) {
    throw std::invalid_argument("estimator table must have N + 1 entries");
  }
  for (double v : estimates_) {
    if (std::isnan(v)) throw std::invalid_argument("estimator table contains NaN");
    if (!unconstrained_) require_probability(v, "estimate");
  }
}

double linear_inversion(const TrialModel& model, int n) {
  require_count(model, n);
  return invert_effective_prob(model, static_cast<double>(n) / model.trials());
}

double maximum_likelihood(const TrialModel& model, int n) {
  require_count(model, n);
  const double trials = model.trials();
  const double a = model.noise();
  if (n < a * trials) return 0.0;
  if (n > trials * (1.0 - a)) return 1.0;
  return std::clamp((n - a * trials) / (trials * (1.0 - 2.0 * a)), 0.0, 1.0);
}

double add_beta(const TrialModel& model, HedgingParam beta, int n) {
  require_noiseless(model, "add-beta", "hedged_ml");
  require_count(model, n);
  return (n + beta.value()) / (model.trials() + 2.0 * beta.value());
}

double braess(const TrialModel& model, int n) {
  require_noiseless(model, "braess", "hedged_ml");
  require_count(model, n);
  const int trials = model.trials();
  if (trials < 2) throw std::invalid_argument("braess requires N >= 2");
  const double N = trials;
  if (n == 0) return (n + 0.5) / (N + 1.25);
  if (n == 1) return (n + 1.0) / (N + 1.75);
  if (n == trials - 1) return (n + 0.75) / (N + 1.75);
  if (n == trials) return (n + 0.75) / (N + 1.25);
  return (n + 0.75) / (N + 1.5);
}

double hml_cubic(const TrialModel& model, HedgingParam beta, int n, double q) {
  const double N = model.trials();
  const double a = model.noise();
  const double b = beta.value();
  return (N + 2 * b) * q * q * q - (N + n + 3 * b) * q * q + (n + b + N * a - N * a * a) * q +
         n * a * a - n * a;
}

double hedged_ml(const TrialModel& model, HedgingParam beta, int n) {
  require_count(model, n);
  const double b = beta.value();
  const double slope = 1.0 - 2.0 * model.noise();
  const int failures = model.trials() - n;
  // Derivative of the hedged log-likelihood in p, times p (1 - p). Equals the
  // cubic over q (1 - q) after the change of variable, but keeps a strict sign
  // change on [0, 1] even when alpha = 0, where the cubic vanishes at both ends.
  auto score = [&](double p) {
    if (p <= 0.0) return b;
    if (p >= 1.0) return -b;
    const double q = effective_prob(model, p);
    return b * (1.0 - 2.0 * p) + slope * p * (1.0 - p) * (n / q - failures / (1.0 - q));
  };
  double root;
  try {
    root = numeric::bracketed_root(score, 0.0, 1.0);
  } catch (const std::domain_error&) {
    throw std::logic_error("hedged_ml: root isolation failed to bracket a sign change");
  }
  return root;
}

Estimator linear_inversion_table(const TrialModel& model) {
  return {model, tabulate(model, [&](int n) { return linear_inversion(model, n); }),
          "linear-inversion", true};
}

Estimator maximum_likelihood_table(const TrialModel& model) {
  return {model, tabulate(model, [&](int n) { return maximum_likelihood(model, n); }), "ml"};
}

Estimator add_beta_table(const TrialModel& model, HedgingParam beta) {
  require_noiseless(model, "add-beta", "hedged_ml");
  return {model, tabulate(model, [&](int n) { return add_beta(model, beta, n); }),
          "add-beta(" + format_param(beta.value()) + ")"};
}

Estimator braess_table(const TrialModel& model) {
  require_noiseless(model, "braess", "hedged_ml");
  return {model, tabulate(model, [&](int n) { return braess(model, n); }), "braess"};
}

Estimator hedged_ml_table(const TrialModel& model, HedgingParam beta) {
  return {model, tabulate(model, [&](int n) { return hedged_ml(model, beta, n); }),
          "hml(" + format_param(beta.value()) + ")"};
}

Estimator bayes_mean_discrete(const TrialModel& model, const DiscretePrior& prior) {
  const int trials = model.trials();
  const std::size_t rows = static_cast<std::size_t>(trials) + 1;
  const auto support = prior.support();
  const std::size_t k = support.size();

  CountDistribution dist(model);
  std::vector<double> log_post(k * rows);
  for (std::size_t i = 0; i < k; ++i) {
    std::span<double> row(log_post.data() + i * rows, rows);
    dist.fill_log(support[i].point, row);
    const double lw = std::log(support[i].weight);
    for (double& v : row) v += lw;
  }

  std::vector<double> out(rows);
  for (std::size_t n = 0; n < rows; ++n) {
    double top = kNegInf;
    for (std::size_t i = 0; i < k; ++i) top = std::max(top, log_post[i * rows + n]);
    if (top == kNegInf) {
      throw std::domain_error("degenerate posterior: count n = " + std::to_string(n) +
                              " has zero likelihood under every support point");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double w = std::exp(log_post[i * rows + n] - top);
      num += w * support[i].point;
      den += w;
    }
    out[n] = std::clamp(num / den, support.front().point, support.back().point);
  }
  return {model, std::move(out), "bayes-discrete"};
}

namespace {

// Posterior mean under Beta(b, b) with a fixed Gauss-Legendre order per half
// interval. For b < 1 the endpoint singularities are removed by the change of
// variable p = s^(1/b) / 2 on [0, 1/2] (mirrored on [1/2, 1]), which turns the
// p^(b-1) dp factor into a constant.
std::vector<double> beta_posterior_means(const TrialModel& model, double b, int order) {
  const int trials = model.trials();
  const bool substitute = b < 1.0;
  const auto rule = numeric::gauss_legendre(order, 0.0, 1.0);

  struct Node {
    double p;
    double log_weight;  // log of quadrature weight times prior density factor
  };
  std::vector<Node> nodes;
  nodes.reserve(2 * rule.nodes.size());
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double s = rule.nodes[j];
    const double lw = std::log(rule.weights[j]);
    if (substitute) {
      const double t = 0.5 * std::pow(s, 1.0 / b);
      nodes.push_back({t, lw + (b - 1.0) * std::log1p(-t)});
      nodes.push_back({1.0 - t, lw + (b - 1.0) * std::log1p(-t)});
    } else {
      const double lo = 0.5 * s;
      const double hi = 0.5 + 0.5 * s;
      nodes.push_back({lo, lw + (b - 1.0) * (std::log(lo) + std::log1p(-lo))});
      nodes.push_back({hi, lw + (b - 1.0) * (std::log(hi) + std::log1p(-hi))});
    }
  }

  std::vector<double> log_q(nodes.size()), log_not_q(nodes.size()), terms(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const double q = effective_prob(model, nodes[j].p);
    log_q[j] = std::log(q);
    log_not_q[j] = std::log1p(-q);
  }

  std::vector<double> out(static_cast<std::size_t>(trials) + 1);
  for (int n = 0; n <= trials; ++n) {
    double top = kNegInf;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      terms[j] = nodes[j].log_weight + n * log_q[j] + (trials - n) * log_not_q[j];
      top = std::max(top, terms[j]);
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const double w = std::exp(terms[j] - top);
      num += w * nodes[j].p;
      den += w;
    }
    out[n] = num / den;
  }
  return out;
}

}  // namespace

Estimator bayes_mean_beta(const TrialModel& model, double beta_prior_param) {
  const HedgingParam b(beta_prior_param);
  const std::string label = "bayes-beta(" + format_param(b.value()) + ")";
  if (model.noiseless()) {
    return {model, tabulate(model, [&](int n) { return add_beta(model, b, n); }), label};
  }
  constexpr int kStartOrder = 200;
  constexpr int kMaxOrder = 3200;
  constexpr double kAgreement = 1e-10;
  auto previous = beta_posterior_means(model, b.value(), kStartOrder);
  for (int order = 2 * kStartOrder; order <= kMaxOrder; order *= 2) {
    auto current = beta_posterior_means(model, b.value(), order);
    double worst = 0.0;
    for (std::size_t n = 0; n < current.size(); ++n) {
      worst = std::max(worst, std::abs(current[n] - previous[n]) / std::abs(current[n]));
    }
    if (worst <= kAgreement) return {model, std::move(current), label};
    previous = std::move(current);
  }
  throw std::runtime_error("bayes_mean_beta: quadrature did not converge by order " +
                           std::to_string(kMaxOrder));
}

}  // namespace noisycoin
