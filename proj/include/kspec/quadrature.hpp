#pragma once

#include <functional>
#include <span>
#include <vector>

namespace kspec {

/// Nodes and weights of a fixed rule. For Gauss-Hermite rules the weights are
/// normalized against the standard Gaussian density and sum to one.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  double apply(const std::function<double(double)>& f) const;
};

/// n-point Gauss-Hermite rule for E f(zeta), zeta ~ N(0,1) (Golub-Welsch).
QuadratureRule gauss_hermite_rule(int n);

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre_rule(int n);

/// n-point generalized Gauss-Laguerre rule for weight t^alpha e^{-t} on
/// (0, inf), weights normalized to sum to one (i.e. a Gamma(alpha+1) law).
QuadratureRule gauss_laguerre_rule(int n, double alpha);

/// Point where the integrand may jump or blow up like |x - at|^{-exponent}.
/// exponent must lie in [0, 1).
struct Singularity {
  double at = 0.0;
  double exponent = 0.0;
};

struct IntegrationResult {
  double value = 0.0;
  double error = 0.0;  // difference between the last two refinements
};

struct IntegrationOptions {
  double tol = 1e-8;       // accept when successive refinements agree to this
  double fail_tol = 1e-6;  // throw QuadratureError when even this is not reached
  int max_panels = 1 << 13;
};

/// Integral of f over [lo, hi] by composite Gauss-Legendre panels, doubling the
/// panel count until two refinements agree. Interior singular points become
/// breakpoints; algebraic singularities at a piece end are removed with the
/// substitution x - at = t^{1/(1-exponent)}.
IntegrationResult integrate(const std::function<double(double)>& f, double lo, double hi,
                            std::span<const Singularity> singularities = {},
                            const IntegrationOptions& options = {});

/// E f(zeta) for zeta ~ N(0,1), truncated to |x| <= 40.
IntegrationResult gaussian_expectation(const std::function<double(double)>& f,
                                       std::span<const Singularity> singularities = {},
                                       const IntegrationOptions& options = {});

}  // namespace kspec
