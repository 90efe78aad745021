#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <vector>

namespace kspec {

inline constexpr int kMaxDegree = 64;
inline constexpr int kMaxMomentOrder = 2 * kMaxDegree;

/// Polynomial stored by monomial coefficients; coeffs[j] multiplies x^j.
struct Polynomial {
  std::vector<double> coeffs;

  int degree() const { return coeffs.empty() ? 0 : static_cast<int>(coeffs.size()) - 1; }
  double operator()(double x) const;
};

/// Normalized (probabilists') Hermite polynomial h_l = He_l / sqrt(l!).
Polynomial hermite_orthonormal(int l);

/// All of h_0..h_L in one pass of the recurrence.
std::vector<Polynomial> hermite_basis(int max_degree);

/// Horner evaluation.
double eval_poly(const Polynomial& poly, double x);

Polynomial derivative(const Polynomial& poly);

/// The three inner-product laws whose moments drive the orthonormal bases.
enum class MomentModel { unit_gaussian, gaussian_inner, sphere_inner };

/// Raw moments mu_0..mu_K of a symmetric law on the real line.
struct MomentSequence {
  MomentModel model = MomentModel::unit_gaussian;
  std::optional<int> p;  // dimension, absent for unit_gaussian
  std::vector<double> moments;

  int max_order() const { return static_cast<int>(moments.size()) - 1; }
};

MomentSequence unit_gaussian_moments(int max_order);

// Moments of sqrt(p) X^T Y with X, Y ~ N(0, I/p):
//   mu_2m = (2m-1)!! * prod_{j<m} (1 + 2j/p),  odd moments vanish.
MomentSequence gaussian_inner_moments(int p, int max_order);

// Moments of sqrt(p) X^T Y with X, Y uniform on the unit sphere S^{p-1}:
//   mu_2m = (2m-1)!! / prod_{j<m} (1 + 2j/p).
MomentSequence sphere_inner_moments(int p, int max_order);

/// Moment sequence for a model, dispatched on the enum.
MomentSequence model_moments(MomentModel model, std::optional<int> p, int max_order);

/// E|X|^{2m} for X ~ N(0, I/p), i.e. prod_{j<m}(1 + 2j/p), as an exact rational.
boost::multiprecision::cpp_rational gaussian_norm_moment_exact(int p, int m);

/// Orthonormal polynomial of degree l under the moment functional of `moments`,
/// with positive leading coefficient. Built from a Cholesky factor of the
/// Hankel matrix [mu_{i+j}] carried out in 50-digit arithmetic.
///
/// Throws DegenerateMomentsError when the diagonally scaled Hankel matrix has
/// condition number above 1e12 or is not positive definite.
Polynomial orthonormal_from_moments(const MomentSequence& moments, int l);

/// P_0..P_L in one factorization.
std::vector<Polynomial> orthonormal_basis_from_moments(const MomentSequence& moments, int max_degree);

/// Number of degree-l spherical harmonics in p variables.
boost::multiprecision::cpp_int jl_dimension(int l, int p);

}  // namespace kspec
