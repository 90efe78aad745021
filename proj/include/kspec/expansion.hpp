#pragma once

#include "kspec/kernels.hpp"
#include "kspec/poly_basis.hpp"
#include "kspec/quadrature.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace kspec {

/// E g(xi) where xi follows the law behind `model`:
///  - unit_gaussian: N(0,1);
///  - gaussian_inner(p): sqrt(p) X^T Y with Gaussian X, Y, evaluated as the
///    scale mixture |X| * zeta with an outer Gauss-Laguerre rule over |X|^2;
///  - sphere_inner(p): density proportional to (1 - x^2/p)^{(p-3)/2} on [-sqrt p, sqrt p].
IntegrationResult model_expectation(MomentModel model, std::optional<int> p,
                                    const std::function<double(double)>& g,
                                    std::span<const Singularity> singularities = {},
                                    const IntegrationOptions& options = {});

/// Basis for expansion coefficients: normalized Hermite, or the orthonormal
/// polynomials of a moment sequence.
class ExpansionBasis {
 public:
  static ExpansionBasis hermite() { return ExpansionBasis(); }
  static ExpansionBasis from_moments(MomentSequence moments) {
    ExpansionBasis b;
    b.moments_ = std::move(moments);
    return b;
  }

  bool is_hermite() const { return !moments_.has_value(); }
  const std::optional<MomentSequence>& moments() const { return moments_; }
  std::vector<Polynomial> polynomials(int max_degree) const;

 private:
  std::optional<MomentSequence> moments_;
};

/// c_l = E[k(zeta) basis_l(zeta)], zeta ~ N(0,1), l = 0..max_degree.
/// Polynomial kernels use `rule`; kernels with singular points use adaptive
/// split quadrature. Throws QuadratureError when refinements disagree by > 1e-6.
std::vector<double> expansion_coefficients(const Kernel& k, const ExpansionBasis& basis, int max_degree,
                                           const QuadratureRule& rule);

/// a_{l,p} = E[k(xi) P_l(xi)] with xi drawn from the law of `moments.model`
/// and P_l its own orthonormal polynomials.
std::vector<double> inner_expansion_coefficients(const Kernel& k, const MomentSequence& moments, int max_degree);

}  // namespace kspec
