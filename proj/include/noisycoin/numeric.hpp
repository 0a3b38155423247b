#pragma once

#include <cstddef>
#include <functional>
#include <vector>

// Scalar and low-dimensional numerical building blocks shared by the
// estimator, risk and search modules.
namespace noisycoin::numeric {

struct ScalarOptimum {
  double x;
  double value;
};

/// Maximizes f on [lo, hi] (Brent's method: golden section with parabolic
/// steps). Endpoint values are compared against the interior optimum.
ScalarOptimum maximize(const std::function<double(double)>& f, double lo, double hi);

/// Root of f on [lo, hi]; f(lo) and f(hi) must have opposite signs
/// (std::domain_error otherwise). Bracketed TOMS 748 iteration until the
/// bracket agrees to `bits` binary digits.
double bracketed_root(const std::function<double(double)>& f, double lo, double hi, int bits = 53);

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with `order` nodes mapped to [lo, hi].
GaussRule gauss_legendre(int order, double lo, double hi);

struct NelderMeadOptions {
  int max_evaluations = 4000;
  double value_tolerance = 1e-14;  // relative spread of simplex values
  double step_tolerance = 1e-10;   // simplex diameter
};

struct NelderMeadResult {
  std::vector<double> x;
  double value;
  int evaluations;
};

/// Minimizes f starting from a simplex around x0 with per-coordinate steps.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const std::vector<double>& steps,
                             const NelderMeadOptions& options = {});

/// Worker count from NOISYCOIN_THREADS (0 or unset = hardware concurrency).
unsigned thread_count();

/// Calls body(i) for every i in [0, count), split across thread_count()
/// threads. body must only write state owned by index i.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace noisycoin::numeric
