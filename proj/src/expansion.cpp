#include "kspec/expansion.hpp"

#include "kspec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kspec {

namespace {

constexpr int kMixtureNodes = 48;

IntegrationResult gaussian_mixture_expectation(int p, const std::function<double(double)>& g,
                                               std::span<const Singularity> singularities,
                                               const IntegrationOptions& options) {
  // |X|^2 = 2T/p with T ~ Gamma(p/2), and given |X| = s, xi ~ s * zeta.
  const QuadratureRule outer = gauss_laguerre_rule(kMixtureNodes, 0.5 * p - 1.0);
  IntegrationResult total;
  for (std::size_t i = 0; i < outer.nodes.size(); ++i) {
    const double s = std::sqrt(2.0 * outer.nodes[i] / p);
    std::vector<Singularity> scaled(singularities.begin(), singularities.end());
    for (auto& sg : scaled) sg.at /= s;
    const auto inner = gaussian_expectation([&](double x) { return g(s * x); }, scaled, options);
    total.value += outer.weights[i] * inner.value;
    total.error += outer.weights[i] * inner.error;
  }
  return total;
}

IntegrationResult sphere_expectation(int p, const std::function<double(double)>& g,
                                     std::span<const Singularity> singularities,
                                     const IntegrationOptions& options) {
  if (p < 2) throw UsageError("sphere model requires p >= 2");
  const double root = std::sqrt(static_cast<double>(p));
  const double bound = std::min(root, 40.0);
  const double log_norm = std::lgamma(0.5 * p) - std::lgamma(0.5 * (p - 1)) - 0.5 * std::log(std::numbers::pi) -
                          0.5 * std::log(static_cast<double>(p));
  const double power = 0.5 * (p - 3);
  auto weighted = [&](double x) {
    const double shape = power == 0.0 ? 0.0 : power * std::log1p(-x * x / p);
    return g(x) * std::exp(log_norm + shape);
  };
  std::vector<Singularity> sing(singularities.begin(), singularities.end());
  if (p < 3) {
    sing.push_back({-root, -power});
    sing.push_back({root, -power});
  }
  return integrate(weighted, -bound, bound, sing, options);
}

}  // namespace

IntegrationResult model_expectation(MomentModel model, std::optional<int> p, const std::function<double(double)>& g,
                                    std::span<const Singularity> singularities, const IntegrationOptions& options) {
  switch (model) {
    case MomentModel::unit_gaussian:
      return gaussian_expectation(g, singularities, options);
    case MomentModel::gaussian_inner:
      if (!p || *p < 1) throw UsageError("gaussian_inner expectation needs p >= 1");
      return gaussian_mixture_expectation(*p, g, singularities, options);
    case MomentModel::sphere_inner:
      if (!p) throw UsageError("sphere_inner expectation needs p");
      return sphere_expectation(*p, g, singularities, options);
  }
  throw UsageError("unknown moment model");
}

std::vector<Polynomial> ExpansionBasis::polynomials(int max_degree) const {
  if (!moments_) return hermite_basis(max_degree);
  return orthonormal_basis_from_moments(*moments_, max_degree);
}

namespace {

int kernel_degree(const Kernel& k) {
  switch (k.kind()) {
    case KernelKind::linear:
      return 1;
    case KernelKind::hermite_unit:
      return k.l();
    case KernelKind::series:
      return static_cast<int>(k.series_coeffs().size()) - 1;
    default:
      return -1;
  }
}

}  // namespace

std::vector<double> expansion_coefficients(const Kernel& k, const ExpansionBasis& basis, int max_degree,
                                           const QuadratureRule& rule) {
  if (max_degree < 0 || max_degree > kMaxDegree) throw UsageError("expansion degree must lie in [0, 64]");
  const auto polys = basis.polynomials(max_degree);
  std::vector<double> out(max_degree + 1, 0.0);
  const int exact_degree = 2 * static_cast<int>(rule.nodes.size()) - 1;
  const bool use_rule = k.is_polynomial() && kernel_degree(k) + max_degree <= exact_degree;
  const auto sing = k.singularities();
  for (int l = 0; l <= max_degree; ++l) {
    const Polynomial& poly = polys[l];
    auto integrand = [&](double x) { return k(x) * poly(x); };
    out[l] = use_rule ? rule.apply(integrand) : gaussian_expectation(integrand, sing).value;
  }
  return out;
}

std::vector<double> inner_expansion_coefficients(const Kernel& k, const MomentSequence& moments, int max_degree) {
  if (max_degree < 0 || max_degree > kMaxDegree) throw UsageError("expansion degree must lie in [0, 64]");
  const auto polys = orthonormal_basis_from_moments(moments, max_degree);
  const auto sing = k.singularities();
  std::vector<double> out(max_degree + 1, 0.0);
  for (int l = 0; l <= max_degree; ++l) {
    const Polynomial& poly = polys[l];
    out[l] = model_expectation(moments.model, moments.p, [&](double x) { return k(x) * poly(x); }, sing).value;
  }
  return out;
}

}  // namespace kspec
