#include "noisycoin/lfp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace noisycoin {

namespace {

// A prior atom together with its mirror image. location 0 stands for the pair
// {0, 1}, location 1/2 for the single centre atom; anything in between for
// {x, 1 - x} with half the weight on each.
struct Orbit {
  double location;
  double weight;
};

constexpr double kMergeDistance = 1e-4;
constexpr double kPruneWeight = 1e-250;
constexpr double kNegligibleWeight = 1e-280;
constexpr double kStepGain = 1e-16;
constexpr double kEqualizeTolerance = 1e-11;
constexpr double kFaintRatio = 1e-12;
constexpr double kFaintWeight = 1e-6;
// Relative pointwise deviation allowed on the support, per unit tolerance.
constexpr double kDualityFactor = 10.0;
// Multiple of the freeze floor given to a lifted faint atom.
constexpr double kLiftFactor = 10.0;
// Background mass as a fraction of the duality tolerance.
constexpr double kBackgroundShare = 1e-2;
constexpr int kSlowSteps = 30;
constexpr int kWarmCheckEvery = 50;
constexpr double kWarmStall = 1e-9;
constexpr double kInsertWeight = 0.01;
constexpr int kStallLimit = 5;

bool is_boundary(const Orbit& o) { return o.location == 0.0; }
bool is_centre(const Orbit& o) { return o.location == 0.5; }
bool movable(const Orbit& o) { return !is_boundary(o) && !is_centre(o); }

// Locations strictly increasing; a step that makes two orbits cross or meet
// is rejected.
bool ordered(const std::vector<Orbit>& orbits) {
  for (std::size_t j = 1; j < orbits.size(); ++j) {
    if (!(orbits[j].location > orbits[j - 1].location)) return false;
  }
  return true;
}

// Faint fixed density under the orbits: `mass` spread evenly over `points`
// (each mirrored) on an arcsine grid. It keeps the posterior mean sensible
// for counts far from every orbit, where the atom weights a least favorable
// prior would need are far below double precision.
struct Background {
  std::vector<double> points;  // in (0, 1/2)
  double mass = 0.0;
};

Background make_background(const TrialModel& model, double mass) {
  const int size = std::max(200, static_cast<int>(std::ceil(8.0 * std::sqrt(model.trials()))));
  Background bg{{}, mass};
  for (int j = 1; j < size; ++j) {
    const double s = std::sin(0.25 * std::numbers::pi * j / size);
    bg.points.push_back(s * s);
  }
  return bg;
}

DiscretePrior expand(const std::vector<Orbit>& orbits, const Background& bg) {
  std::vector<SupportPoint> atoms;
  const double keep = 1.0 - bg.mass;
  for (const auto& o : orbits) {
    if (!(o.weight > kNegligibleWeight)) continue;
    if (is_centre(o)) {
      atoms.push_back({0.5, keep * o.weight});
    } else {
      atoms.push_back({o.location, 0.5 * keep * o.weight});
      atoms.push_back({1.0 - o.location, 0.5 * keep * o.weight});
    }
  }
  if (bg.mass > 0.0) {
    const double each = 0.5 * bg.mass / static_cast<double>(bg.points.size());
    for (double x : bg.points) {
      atoms.push_back({x, each});
      atoms.push_back({1.0 - x, each});
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const SupportPoint& a, const SupportPoint& b) { return a.point < b.point; });
    std::vector<SupportPoint> merged;
    for (const auto& a : atoms) {
      if (!merged.empty() && merged.back().point == a.point) {
        merged.back().weight += a.weight;
      } else {
        merged.push_back(a);
      }
    }
    atoms = std::move(merged);
  }
  return DiscretePrior::normalized(std::move(atoms));
}

DiscretePrior expand(const std::vector<Orbit>& orbits) { return expand(orbits, Background{}); }

std::vector<Orbit> fold(const DiscretePrior& prior) {
  std::vector<Orbit> orbits;
  for (const auto& s : prior.support()) {
    if (s.point > 0.5) continue;
    const double w = s.point == 0.5 ? s.weight : 2.0 * s.weight;
    orbits.push_back({s.point, w});
  }
  double total = 0.0;
  for (const auto& o : orbits) total += o.weight;
  for (auto& o : orbits) o.weight /= total;
  return orbits;
}

// Merges near-coincident orbits, snaps orbits onto 0 or 1/2 and drops
// vanishing weights. Keeps orbits sorted by location.
void tidy(std::vector<Orbit>& orbits) {
  std::erase_if(orbits, [](const Orbit& o) { return o.weight < kPruneWeight; });
  for (auto& o : orbits) {
    if (o.location < 1e-7) o.location = 0.0;
    if (o.location > 0.5 - 0.5 * kMergeDistance) o.location = 0.5;
  }
  std::sort(orbits.begin(), orbits.end(),
            [](const Orbit& a, const Orbit& b) { return a.location < b.location; });
  std::vector<Orbit> merged;
  for (const auto& o : orbits) {
    if (!merged.empty() && o.location - merged.back().location < kMergeDistance) {
      Orbit& m = merged.back();
      const double w = m.weight + o.weight;
      if (is_boundary(m) || is_centre(o)) {
        m.location = is_boundary(m) ? 0.0 : 0.5;
      } else {
        m.location = (m.location * m.weight + o.location * o.weight) / w;
      }
      m.weight = w;
    } else {
      merged.push_back(o);
    }
  }
  double total = 0.0;
  for (const auto& o : merged) total += o.weight;
  for (auto& o : merged) o.weight /= total;
  orbits = std::move(merged);
}

// Bayes risk of the prior's own Bayes estimator, and its gradient in the
// reduced coordinates: log weights relative to the heaviest orbit `ref`, then
// the locations of the movable orbits. By the envelope argument the weight
// derivative is w_j (R(x_j) - B) and the location derivative is w_j R'(x_j).
struct Evaluation {
  double bayes_risk;
  Eigen::VectorXd gradient;
  std::vector<double> at_orbit;  // pointwise risk at each orbit location
};

class Objective {
 public:
  // With `freeze_faint`, orbits lighter than kFaintWeight times the heaviest
  // keep their location and their weight relative to the heaviest.
  Objective(const TrialModel& model, std::vector<Orbit> orbits, const Background& bg, bool freeze_faint = false)
      : model_(model), orbits_(std::move(orbits)), bg_(bg) {
    ref_ = 0;
    for (std::size_t j = 1; j < orbits_.size(); ++j) {
      if (orbits_[j].weight > orbits_[ref_].weight) ref_ = j;
    }
    const double floor = freeze_faint ? kFaintWeight * orbits_[ref_].weight : 0.0;
    for (std::size_t j = 0; j < orbits_.size(); ++j) {
      if (j != ref_ && orbits_[j].weight >= floor) weight_index_.push_back(j);
    }
    for (std::size_t j = 0; j < orbits_.size(); ++j) {
      if (movable(orbits_[j]) && orbits_[j].weight >= floor) location_index_.push_back(j);
    }
  }

  std::size_t dim() const { return weight_index_.size() + location_index_.size(); }
  std::size_t weight_dim() const { return weight_index_.size(); }
  const std::vector<Orbit>& orbits() const { return orbits_; }

  Eigen::VectorXd point() const {
    Eigen::VectorXd x(dim());
    std::size_t k = 0;
    const double log_ref = std::log(orbits_[ref_].weight);
    for (auto j : weight_index_) x[k++] = std::log(orbits_[j].weight) - log_ref;
    for (auto j : location_index_) x[k++] = orbits_[j].location;
    return x;
  }

  std::vector<Orbit> at(const Eigen::VectorXd& x) const {
    std::vector<Orbit> out = orbits_;
    for (auto& o : out) o.weight /= orbits_[ref_].weight;
    std::size_t k = 0;
    for (auto j : weight_index_) out[j].weight = std::exp(std::clamp(x[k++], -700.0, 700.0));
    double total = 0.0;
    for (const auto& o : out) total += o.weight;
    for (auto& o : out) o.weight /= total;
    for (auto j : location_index_) out[j].location = x[k++];
    return out;
  }

  // Largest t in (0, 1] keeping every movable location inside (0, 1/2) when
  // stepping from x along d, with a margin of half the remaining distance.
  double max_step(const Eigen::VectorXd& x, const Eigen::VectorXd& d) const {
    double t = 1.0;
    for (std::size_t k = weight_dim(); k < dim(); ++k) {
      if (d[k] < 0.0) t = std::min(t, -0.5 * x[k] / d[k]);
      if (d[k] > 0.0) t = std::min(t, 0.5 * (0.5 - x[k]) / d[k]);
    }
    return t;
  }

  double bayes_risk(const Eigen::VectorXd& x) const {
    const auto orbits = at(x);
    return ordered(orbits) ? evaluate_orbits(orbits, false).bayes_risk : -kInfiniteRisk;
  }
  Evaluation evaluate(const Eigen::VectorXd& x) const { return evaluate_orbits(at(x), true); }

  // Central differences of the analytic gradient, symmetrized.
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const {
    const std::size_t n = dim();
    Eigen::MatrixXd h(n, n);
    for (std::size_t c = 0; c < n; ++c) {
      const double step = c < weight_dim() ? 1e-4 : std::min({1e-6, 0.25 * x[c], 0.25 * (0.5 - x[c])});
      Eigen::VectorXd up = x, down = x;
      up[c] += step;
      down[c] -= step;
      h.col(c) = (evaluate(up).gradient - evaluate(down).gradient) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
  }

 private:
  Evaluation evaluate_orbits(const std::vector<Orbit>& orbits, bool with_gradient) const {
    const Estimator est = bayes_mean_discrete(model_, expand(orbits, bg_));
    const RiskFunction risk(est);
    std::vector<double> at_orbit(orbits.size());
    double total = 0.0;
    for (std::size_t j = 0; j < orbits.size(); ++j) {
      at_orbit[j] = risk(orbits[j].location);
      total += orbits[j].weight * at_orbit[j];
    }
    // The background has fixed weights, so it adds to the value but not to
    // the gradient, which only rescales by the orbit share.
    const double keep = 1.0 - bg_.mass;
    double below = 0.0;
    if (bg_.mass > 0.0) {
      for (double x : bg_.points) below += 0.5 * (risk(x) + risk(1.0 - x));
      below *= bg_.mass / static_cast<double>(bg_.points.size());
    }
    Evaluation e{keep * total + below, Eigen::VectorXd(with_gradient ? dim() : 0), at_orbit};
    if (with_gradient) {
      std::size_t k = 0;
      for (auto j : weight_index_) e.gradient[k++] = keep * orbits[j].weight * (at_orbit[j] - total);
      for (auto j : location_index_) {
        e.gradient[k++] = keep * orbits[j].weight * risk.derivative(orbits[j].location);
      }
    }
    return e;
  }

  TrialModel model_;
  std::vector<Orbit> orbits_;
  Background bg_;
  std::size_t ref_;
  std::vector<std::size_t> weight_index_;
  std::vector<std::size_t> location_index_;
};

// Maximizes Bayes risk over the weights and movable locations of the current
// orbits with a trust-region Newton iteration (finite-difference Hessian of the
// analytic gradient, trust region scaled by the Hessian diagonal).
std::vector<Orbit> optimize_support(const TrialModel& model, std::vector<Orbit> orbits, const Background& bg,
                                    int max_steps = 200) {
  tidy(orbits);
  double radius = -1.0;
  int quiet = 0;
  for (int step = 0; step < max_steps; ++step) {
    const Objective obj(model, orbits, bg, true);
    if (obj.dim() == 0) break;
    const Eigen::VectorXd x = obj.point();
    const Evaluation here = obj.evaluate(x);

    const Eigen::MatrixXd hess = obj.hessian(x);
    const double diag_top = hess.diagonal().cwiseAbs().maxCoeff();
    const Eigen::VectorXd scale =
        hess.diagonal().cwiseAbs().cwiseMax(1e-20 * diag_top + 1e-300).cwiseSqrt();
    const Eigen::VectorXd inv = scale.cwiseInverse();
    const Eigen::MatrixXd scaled = inv.asDiagonal() * hess * inv.asDiagonal();
    const Eigen::VectorXd grad = inv.cwiseProduct(here.gradient);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
    const Eigen::VectorXd lambda = eig.eigenvalues();
    const Eigen::VectorXd coeff = eig.eigenvectors().transpose() * grad;
    auto step_for = [&](double shift) {
      return Eigen::VectorXd(eig.eigenvectors() *
                             coeff.cwiseQuotient((shift - lambda.array()).matrix()));
    };
    if (radius < 0.0) radius = std::max(grad.norm(), 1e-300);

    // Smallest shift keeping -H + shift I positive definite and the scaled
    // step inside the trust radius.
    const double high = lambda.maxCoeff();
    double lo = high < 0.0 ? 0.0 : high + 1e-12 * std::abs(high) + 1e-300;
    Eigen::VectorXd s = step_for(lo);
    if (!(s.norm() <= radius)) {
      double hi = std::max(lo, 1e-300) * 2.0 + grad.norm() / radius;
      while (step_for(hi).norm() > radius) hi *= 2.0;
      for (int it = 0; it < 100 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (step_for(mid).norm() > radius ? lo : hi) = mid;
      }
      s = step_for(hi);
    }
    Eigen::VectorXd dir = inv.cwiseProduct(s);
    const double t_max = obj.max_step(x, dir);
    if (t_max < 1.0) {
      dir *= t_max;
      s *= t_max;
    }

    const double predicted = here.gradient.dot(dir) + 0.5 * dir.dot(hess * dir);
    if (!(predicted > kStepGain * here.bayes_risk)) {
      if (++quiet >= 2) break;
    } else {
      quiet = 0;
    }
    const Eigen::VectorXd trial = x + dir;
    const double actual = obj.bayes_risk(trial) - here.bayes_risk;
    const double ratio = predicted > 0.0 ? actual / predicted : -1.0;
    if (ratio < 0.25) {
      radius = 0.25 * s.norm();
    } else if (ratio > 0.75 && s.norm() > 0.99 * radius) {
      radius *= 2.0;
    }
    if (actual > 0.0 && ratio > 0.1) {
      orbits = obj.at(trial);
      tidy(orbits);
    }
    if (radius < 1e-14) break;
  }
  return orbits;
}

// Solves the equalizer conditions of a least favorable prior on a fixed
// support: R(x_j) = V at every orbit and R'(x_j) = 0 at every movable orbit.
// Unknowns are the log weights relative to the heaviest orbit, the movable
// locations and V; Levenberg-Marquardt with a central-difference Jacobian.
// Residuals are scaled by V and by the local standard deviation of the
// estimate, so faint atoms count as much as heavy ones.
class Equalizer {
 public:
  Equalizer(const TrialModel& model, const std::vector<Orbit>& orbits, const Background& bg)
      : objective_(model, orbits, bg), model_(model), bg_(bg) {}

  std::size_t dim() const { return objective_.dim() + 1; }

  Eigen::VectorXd residual(const Eigen::VectorXd& z) const {
    const std::vector<Orbit> orbits = objective_.at(z.head(objective_.dim()));
    if (!ordered(orbits)) return Eigen::VectorXd::Constant(dim(), kInfiniteRisk);
    const Estimator est = bayes_mean_discrete(model_, expand(orbits, bg_));
    const RiskFunction risk(est);
    const double v = z[dim() - 1];
    Eigen::VectorXd r(dim());
    std::size_t k = 0;
    for (const auto& o : orbits) r[k++] = (risk(o.location) - v) / scale_;
    for (const auto& o : orbits) {
      if (movable(o)) r[k++] = risk.derivative(o.location) * spread(o.location) / scale_;
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd jac(dim(), dim());
    const std::size_t weights = objective_.weight_dim();
    for (std::size_t c = 0; c + 1 < dim(); ++c) {
      const double step = c < weights ? 1e-5 : std::min({1e-7, 0.25 * z[c], 0.25 * (0.5 - z[c])});
      Eigen::VectorXd up = z, down = z;
      up[c] += step;
      down[c] -= step;
      jac.col(c) = (residual(up) - residual(down)) / (2.0 * step);
    }
    jac.col(dim() - 1).setZero();
    jac.col(dim() - 1).head(objective_.orbits().size()).setConstant(-1.0 / scale_);
    return jac;
  }

  Eigen::VectorXd start(double v) {
    scale_ = v;
    Eigen::VectorXd z(dim());
    z.head(objective_.dim()) = objective_.point();
    z[dim() - 1] = v;
    return z;
  }

  // Shortens a step so movable locations stay inside (0, 1/2).
  double max_step(const Eigen::VectorXd& z, const Eigen::VectorXd& d) const {
    return objective_.max_step(z.head(objective_.dim()), d.head(objective_.dim()));
  }

  std::vector<Orbit> orbits(const Eigen::VectorXd& z) const { return objective_.at(z.head(objective_.dim())); }

 private:
  double spread(double p) const {
    const double q = effective_prob(model_, p);
    return std::sqrt(q * (1.0 - q) / model_.trials()) / (1.0 - 2.0 * model_.noise());
  }

  Objective objective_;
  TrialModel model_;
  Background bg_;
  double scale_ = 1.0;
};

struct EqualizeResult {
  std::vector<Orbit> orbits;
  double residual;  // largest scaled residual at the end
};

// Orbit whose weight the equalizer is trying to remove: risk below V, and
// the lightest such orbit relative to its neighbours. -1 if none.
int leaving_orbit(const std::vector<Orbit>& orbits, const Eigen::VectorXd& r) {
  int out = -1;
  double best = 0.0;
  double top = 0.0;
  for (const auto& o : orbits) top = std::max(top, o.weight);
  for (std::size_t j = 0; j < orbits.size(); ++j) {
    if (!(r[j] < 0.0) || orbits[j].weight >= kFaintWeight * top) continue;
    double nearby = 0.0;
    if (j > 0) nearby = std::max(nearby, orbits[j - 1].weight);
    if (j + 1 < orbits.size()) nearby = std::max(nearby, orbits[j + 1].weight);
    const double ratio = nearby > 0.0 ? orbits[j].weight / nearby : 1.0;
    if (out < 0 || ratio < best) {
      out = static_cast<int>(j);
      best = ratio;
    }
  }
  return out;
}

bool faint_leaving(const std::vector<Orbit>& orbits, const Eigen::VectorXd& r, int j) {
  (void)r;
  if (j < 0) return false;
  double nearby = 0.0;
  if (j > 0) nearby = std::max(nearby, orbits[j - 1].weight);
  if (j + 1 < static_cast<int>(orbits.size())) nearby = std::max(nearby, orbits[j + 1].weight);
  return orbits[j].weight < kFaintRatio * nearby;
}

EqualizeResult equalize(const TrialModel& model, std::vector<Orbit> orbits, const Background& bg,
                        int max_steps = 100) {
  tidy(orbits);
  for (int round = 0;; ++round) {
    const DiscretePrior prior = expand(orbits, bg);
    const double v0 = bayes_risk(bayes_mean_discrete(model, prior), prior);
    Equalizer eq(model, orbits, bg);
    Eigen::VectorXd z = eq.start(v0);
    Eigen::VectorXd r = eq.residual(z);
    double cost = r.squaredNorm();
    double mu = 1e-3;
    int slow = 0;
    int leaving = -1;
    for (int step = 0; step < max_steps && r.lpNorm<Eigen::Infinity>() > kEqualizeTolerance; ++step) {
      const Eigen::MatrixXd jac = eq.jacobian(z);
      const Eigen::MatrixXd normal = jac.transpose() * jac;
      const Eigen::VectorXd rhs = -jac.transpose() * r;
      const Eigen::VectorXd diag = normal.diagonal().cwiseMax(1e-300);
      const double before = cost;
      bool accepted = false;
      for (int tries = 0; tries < 30 && !accepted; ++tries) {
        Eigen::MatrixXd damped = normal;
        damped.diagonal() += mu * diag;
        Eigen::VectorXd d = damped.ldlt().solve(rhs);
        if (!d.allFinite()) {
          mu *= 4.0;
          continue;
        }
        const double t = eq.max_step(z, d);
        if (t < 1.0) d *= 0.9 * t;
        const Eigen::VectorXd trial = z + d;
        const Eigen::VectorXd rt = eq.residual(trial);
        const double ct = rt.squaredNorm();
        if (std::isfinite(ct) && ct < cost) {
          z = trial;
          r = rt;
          cost = ct;
          mu = std::max(mu / 3.0, 1e-12);
          accepted = true;
        } else {
          mu *= 4.0;
        }
      }
      slow = cost > 0.5 * before ? slow + 1 : 0;
      leaving = leaving_orbit(eq.orbits(z), r);
      if (!accepted || slow >= kSlowSteps || faint_leaving(eq.orbits(z), r, leaving)) break;
    }
    orbits = eq.orbits(z);
    const double res = r.lpNorm<Eigen::Infinity>();
    if (res <= kEqualizeTolerance || leaving < 0 || orbits.size() <= 1) {
      tidy(orbits);
      return {orbits, res};
    }
    orbits.erase(orbits.begin() + leaving);
    tidy(orbits);
  }
}

struct Outer {
  std::vector<Orbit> orbits;
  Estimator estimator;
  double bayes_risk;
  RiskProfile profile;
  RiskMaximum worst;
};

Outer assess(const TrialModel& model, std::vector<Orbit> orbits, const Background& bg, int grid_size) {
  DiscretePrior prior = expand(orbits, bg);
  Estimator est = bayes_mean_discrete(model, prior);
  const double b = bayes_risk(est, prior);
  RiskProfile profile = risk_profile(est, grid_size);
  const RiskMaximum worst = profile.global_max();
  return {std::move(orbits), std::move(est), b, std::move(profile), worst};
}

// Concave ascent of the Bayes risk over priors confined to a fixed grid
// (uniform in arcsin sqrt(p), plus the seed atoms), by exponentiated-gradient
// updates of the weights. The grid weights are then split at their local
// minima and every cluster collapsed into one atom, giving the add-point loop
// a support of the right shape to start from.
std::vector<Orbit> grid_warm_start(const TrialModel& model, const std::vector<Orbit>& seed, int steps) {
  const int half = std::max(20, static_cast<int>(std::ceil(4.0 * std::sqrt(model.trials()))));
  std::vector<Orbit> grid;
  for (int j = 0; j <= half; ++j) {
    const double s = std::sin(0.25 * std::numbers::pi * j / half);
    grid.push_back({j == half ? 0.5 : s * s, 0.5 / (half + 1)});
  }
  for (const auto& o : seed) grid.push_back({o.location, 0.5 * o.weight});
  std::sort(grid.begin(), grid.end(),
            [](const Orbit& a, const Orbit& b) { return a.location < b.location; });
  std::vector<Orbit> merged;
  for (const auto& o : grid) {
    if (!merged.empty() && o.location - merged.back().location < 1e-12) {
      merged.back().weight += o.weight;
    } else {
      merged.push_back(o);
    }
  }
  grid = std::move(merged);

  // The step grows while the Bayes risk keeps increasing and is cut back when
  // it does not.
  std::vector<double> at(grid.size());
  std::vector<Orbit> previous = grid;
  double previous_b = -1.0;
  double eta = -1.0;
  double checkpoint = -1.0;
  for (int it = 0; it < steps; ++it) {
    const Estimator est = bayes_mean_discrete(model, expand(grid));
    const RiskFunction risk(est);
    double b = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      at[j] = risk(grid[j].location);
      b += grid[j].weight * at[j];
    }
    if (eta < 0.0) eta = 1.0 / b;
    if (it % kWarmCheckEvery == 0) {
      if (checkpoint > 0.0 && b - checkpoint <= kWarmStall * b) break;
      checkpoint = b;
    }
    if (b < previous_b) {
      grid = previous;
      eta *= 0.5;
    } else {
      previous = grid;
      previous_b = b;
      eta *= 1.2;
    }
    const auto& base = previous;
    double total = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      grid[j].weight = base[j].weight * std::exp(std::min(eta * (at[j] - b), 50.0));
      total += grid[j].weight;
    }
    for (auto& o : grid) o.weight /= total;
  }
  grid = previous;

  // Split at local minima of the weight, then cut every cluster into chunks
  // no wider than the local standard deviation of the estimate, and collapse
  // each chunk into one atom.
  auto spread = [&](double p) {
    const double q = effective_prob(model, p);
    return std::sqrt(q * (1.0 - q) / model.trials()) / (1.0 - 2.0 * model.noise());
  };
  std::vector<Orbit> out;
  auto collapse = [&](std::size_t first, std::size_t last) {
    std::size_t peak = first;
    double mass = 0.0, moment = 0.0;
    for (std::size_t j = first; j < last; ++j) {
      if (grid[j].weight > grid[peak].weight) peak = j;
      mass += grid[j].weight;
      moment += grid[j].weight * grid[j].location;
    }
    if (!(mass > kNegligibleWeight)) return;
    double location = moment / mass;
    if (is_boundary(grid[peak]) || is_centre(grid[peak])) location = grid[peak].location;
    out.push_back({location, mass});
  };
  std::size_t begin = 0;
  while (begin < grid.size()) {
    std::size_t end = begin + 1;
    while (end < grid.size() && grid[end].weight >= grid[end - 1].weight) ++end;
    while (end < grid.size() && grid[end].weight < grid[end - 1].weight) ++end;
    std::size_t first = begin;
    for (std::size_t j = begin + 1; j <= end; ++j) {
      const double width = spread(0.5 * (grid[first].location + grid[j - 1].location));
      if (j == end || grid[j].location - grid[first].location > width) {
        collapse(first, j);
        first = j;
      }
    }
    begin = end;
  }
  tidy(out);
  return out;
}

}  // namespace

std::vector<SupportPoint> default_seed(const TrialModel& model) {
  const double edge = 1.0 / std::sqrt(static_cast<double>(model.trials()));
  std::vector<SupportPoint> seed{{0.0, 0.2}, {0.5, 0.2}, {1.0, 0.2}};
  const double x = std::min(edge, 1.0 - edge);
  if (x > kMergeDistance && x < 0.5 - kMergeDistance) {
    seed.push_back({x, 0.2});
    seed.push_back({1.0 - x, 0.2});
  }
  std::sort(seed.begin(), seed.end(), [](const SupportPoint& a, const SupportPoint& b) { return a.point < b.point; });
  return seed;
}

LfpResult lfp_search(const TrialModel& model, const LfpOptions& options) {
  if (model.trials() < 2) throw std::invalid_argument("lfp_search requires N >= 2");
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("lfp tolerance must be positive");
  const DiscretePrior seed =
      options.seed ? *options.seed : DiscretePrior::normalized(default_seed(model));
  if (!seed.symmetric(1e-12)) throw std::invalid_argument("lfp seed prior must be symmetric");

  std::vector<Orbit> orbits = fold(seed);
  if (options.warm_start) orbits = grid_warm_start(model, orbits, options.warm_start_steps);

  std::vector<LfpTrace> trace;
  auto emit = [&](LfpTrace row) {
    trace.push_back(row);
    if (options.on_iteration) options.on_iteration(row);
  };
  double best_bayes = -1.0;
  int stalled = 0;
  Background bg;
  // Switching on the background restarts the stall count; it happens once.
  auto add_background = [&](LfpTrace& row) {
    if (bg.mass > 0.0) return false;
    bg = make_background(model, kBackgroundShare * options.tolerance);
    best_bayes = -1.0;
    stalled = 0;
    row.action = "background";
    emit(row);
    return true;
  };
  auto finish = [&](Outer& state, double gap, int iteration, bool converged) {
    DiscretePrior prior = expand(state.orbits, bg);
    return LfpResult{model,          std::move(prior), std::move(state.estimator),
                     state.bayes_risk, state.worst.risk, state.worst,
                     gap,            options.tolerance, iteration,
                     converged,      std::move(trace)};
  };

  for (int iteration = 1;; ++iteration) {
    orbits = optimize_support(model, std::move(orbits), bg);
    Outer state = assess(model, orbits, bg, options.grid_size);
    {
      // The equalizer may drop faint atoms that still hold the risk down
      // elsewhere; keep its answer only if the gap shrinks.
      Outer equalized = assess(model, equalize(model, orbits, bg).orbits, bg, options.grid_size);
      const auto gap_of = [](const Outer& o) { return (o.worst.risk - o.bayes_risk) / o.worst.risk; };
      if (gap_of(equalized) <= gap_of(state)) state = std::move(equalized);
      orbits = state.orbits;
    }
    const double gap = (state.worst.risk - state.bayes_risk) / state.worst.risk;
    LfpTrace row{iteration, expand(state.orbits, bg).size(), state.bayes_risk, state.worst.risk, gap, ""};

    if (gap <= options.tolerance) {
      row.action = "converged";
      emit(row);
      return finish(state, gap, iteration, true);
    }
    if (state.bayes_risk > best_bayes * (1.0 + 1e-13)) {
      best_bayes = state.bayes_risk;
      stalled = 0;
    } else if (++stalled >= kStallLimit) {
      if (add_background(row)) continue;
      row.action = "stalled";
      emit(row);
      return finish(state, gap, iteration, false);
    }
    if (iteration >= options.max_iterations) {
      row.action = "iteration limit";
      emit(row);
      return finish(state, gap, iteration, false);
    }

    // Largest local risk maximum that is not already an atom.
    const RiskMaximum* candidate = nullptr;
    for (const auto& m : state.profile.maxima) {
      if (!(m.risk > state.bayes_risk)) continue;
      const double x = std::min(m.p, 1.0 - m.p);
      const bool on_support = std::any_of(orbits.begin(), orbits.end(), [&](const Orbit& o) {
        return std::abs(o.location - x) < kMergeDistance;
      });
      if (on_support) continue;
      if (!candidate || m.risk > candidate->risk) candidate = &m;
    }
    if (candidate) {
      double x = std::min(candidate->p, 1.0 - candidate->p);
      if (x < kMergeDistance) x = 0.0;
      if (x > 0.5 - 0.5 * kMergeDistance) x = 0.5;
      // A new atom between two light neighbours starts at their geometric
      // mean weight rather than at the full insertion weight.
      double left = 0.0, right = 0.0;
      for (const auto& o : orbits) {
        if (o.location <= x) left = o.weight;
        if (o.location > x && right == 0.0) right = o.weight;
      }
      if (right == 0.0) right = left;
      const double weight = std::min(kInsertWeight, std::sqrt(left * right));
      for (auto& o : orbits) o.weight *= 1.0 - weight;
      orbits.push_back({x, weight});
      row.action = "insert p=" + std::to_string(x);
    } else {
      // Every peak is already an atom. Frozen atoms under a peak are lifted
      // back above the freeze floor so the optimizer can move them.
      double top = 0.0;
      for (const auto& o : orbits) top = std::max(top, o.weight);
      int lifted = 0;
      for (const auto& m : state.profile.maxima) {
        if (!(m.risk > state.bayes_risk)) continue;
        const double x = std::min(m.p, 1.0 - m.p);
        for (auto& o : orbits) {
          if (std::abs(o.location - x) < kMergeDistance && o.weight < kFaintWeight * top) {
            o.weight = kLiftFactor * kFaintWeight * top;
            ++lifted;
          }
        }
      }
      row.action = lifted > 0 ? "lift " + std::to_string(lifted) : "refine";
    }
    emit(row);
  }
}

LfpResult lfp_search(const TrialModel& model, double tolerance, int max_iterations) {
  LfpOptions options;
  options.tolerance = tolerance;
  options.max_iterations = max_iterations;
  return lfp_search(model, options);
}

DualityReport verify_duality(const Estimator& estimator, const DiscretePrior& prior,
                             double tolerance, int grid_size) {
  const double top = max_risk(estimator, grid_size).risk;
  const RiskFunction risk(estimator);
  DualityReport report{{}, top, kDualityFactor * tolerance, true};
  for (const auto& s : prior.support()) {
    const double r = risk(s.point);
    const double deviation = std::abs(top - r) / top;
    report.points.push_back({s.point, s.weight, r, deviation});
    if (!(deviation <= report.threshold)) report.passed = false;
  }
  return report;
}

DualityReport verify_duality(const LfpResult& result) {
  const RiskFunction risk(result.estimator);
  DualityReport report{{}, result.max_risk, kDualityFactor * result.tolerance, true};
  for (const auto& s : result.prior.support()) {
    const double r = risk(s.point);
    const double deviation = std::abs(result.max_risk - r) / result.max_risk;
    report.points.push_back({s.point, s.weight, r, deviation});
    if (!(deviation <= report.threshold)) report.passed = false;
  }
  return report;
}

}  // namespace noisycoin
