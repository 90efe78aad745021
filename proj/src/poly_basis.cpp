#include "kspec/poly_basis.hpp"

#include "kspec/errors.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <string>

namespace kspec {

namespace mp = boost::multiprecision;
using Wide = mp::cpp_bin_float_50;

double Polynomial::operator()(double x) const { return eval_poly(*this, x); }

double eval_poly(const Polynomial& poly, double x) {
  double acc = 0.0;
  for (auto it = poly.coeffs.rbegin(); it != poly.coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial derivative(const Polynomial& poly) {
  if (poly.coeffs.size() <= 1) return Polynomial{{0.0}};
  Polynomial out;
  out.coeffs.resize(poly.coeffs.size() - 1);
  for (std::size_t j = 1; j < poly.coeffs.size(); ++j)
    out.coeffs[j - 1] = static_cast<double>(j) * poly.coeffs[j];
  return out;
}

std::vector<Polynomial> hermite_basis(int max_degree) {
  if (max_degree < 0 || max_degree > kMaxDegree)
    throw UsageError("hermite degree must lie in [0, " + std::to_string(kMaxDegree) + "]");
  // Probabilists' recurrence He_{l+1} = x He_l - l He_{l-1}, carried out on
  // exact-ish wide coefficients and normalized by sqrt(l!) at the end.
  std::vector<std::vector<Wide>> he(max_degree + 1);
  he[0] = {Wide(1)};
  if (max_degree >= 1) he[1] = {Wide(0), Wide(1)};
  for (int l = 1; l < max_degree; ++l) {
    std::vector<Wide> next(l + 2, Wide(0));
    for (int j = 0; j <= l; ++j) next[j + 1] += he[l][j];
    for (int j = 0; j <= l - 1; ++j) next[j] -= Wide(l) * he[l - 1][j];
    he[l + 1] = std::move(next);
  }
  std::vector<Polynomial> out(max_degree + 1);
  Wide factorial = 1;
  for (int l = 0; l <= max_degree; ++l) {
    if (l > 0) factorial *= l;
    const Wide norm = mp::sqrt(factorial);
    out[l].coeffs.resize(l + 1);
    for (int j = 0; j <= l; ++j) out[l].coeffs[j] = static_cast<double>(he[l][j] / norm);
  }
  return out;
}

Polynomial hermite_orthonormal(int l) { return hermite_basis(l).back(); }

namespace {

void check_order(int max_order) {
  if (max_order < 0 || max_order > kMaxMomentOrder)
    throw UsageError("moment order must lie in [0, " + std::to_string(kMaxMomentOrder) + "]");
}

mp::cpp_int double_factorial_odd(int m) {  // (2m-1)!!
  mp::cpp_int r = 1;
  for (int i = 2 * m - 1; i > 1; i -= 2) r *= i;
  return r;
}

}  // namespace

mp::cpp_rational gaussian_norm_moment_exact(int p, int m) {
  mp::cpp_rational r = 1;
  for (int j = 0; j < m; ++j) r *= mp::cpp_rational(p + 2 * j, p);
  return r;
}

MomentSequence unit_gaussian_moments(int max_order) {
  check_order(max_order);
  MomentSequence seq{MomentModel::unit_gaussian, std::nullopt, std::vector<double>(max_order + 1, 0.0)};
  for (int k = 0; k <= max_order; k += 2)
    seq.moments[k] = static_cast<double>(double_factorial_odd(k / 2));
  return seq;
}

MomentSequence gaussian_inner_moments(int p, int max_order) {
  check_order(max_order);
  if (p < 1) throw UsageError("gaussian_inner_moments requires p >= 1");
  MomentSequence seq{MomentModel::gaussian_inner, p, std::vector<double>(max_order + 1, 0.0)};
  for (int k = 0; k <= max_order; k += 2) {
    const int m = k / 2;
    const mp::cpp_rational exact = mp::cpp_rational(double_factorial_odd(m)) * gaussian_norm_moment_exact(p, m);
    seq.moments[k] = static_cast<double>(exact);
  }
  return seq;
}

MomentSequence sphere_inner_moments(int p, int max_order) {
  check_order(max_order);
  if (p < 2) throw UsageError("sphere_inner_moments requires p >= 2");
  MomentSequence seq{MomentModel::sphere_inner, p, std::vector<double>(max_order + 1, 0.0)};
  for (int k = 0; k <= max_order; k += 2) {
    const int m = k / 2;
    const mp::cpp_rational exact = mp::cpp_rational(double_factorial_odd(m)) / gaussian_norm_moment_exact(p, m);
    seq.moments[k] = static_cast<double>(exact);
  }
  return seq;
}

MomentSequence model_moments(MomentModel model, std::optional<int> p, int max_order) {
  switch (model) {
    case MomentModel::unit_gaussian:
      return unit_gaussian_moments(max_order);
    case MomentModel::gaussian_inner:
      if (!p) throw UsageError("gaussian_inner model needs a dimension");
      return gaussian_inner_moments(*p, max_order);
    case MomentModel::sphere_inner:
      if (!p) throw UsageError("sphere_inner model needs a dimension");
      return sphere_inner_moments(*p, max_order);
  }
  throw UsageError("unknown moment model");
}

std::vector<Polynomial> orthonormal_basis_from_moments(const MomentSequence& seq, int max_degree) {
  if (max_degree < 0 || max_degree > kMaxDegree)
    throw UsageError("degree must lie in [0, " + std::to_string(kMaxDegree) + "]");
  if (seq.max_order() < 2 * max_degree)
    throw UsageError("moment sequence too short: degree " + std::to_string(max_degree) + " needs order " +
                     std::to_string(2 * max_degree));
  const int n = max_degree + 1;

  // Conditioning is judged on the Jacobi-scaled Hankel matrix; the raw one is
  // dominated by the growth of (2k-1)!! and says little about the factorization.
  Eigen::MatrixXd scaled(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = std::sqrt(seq.moments[2 * i] * seq.moments[2 * j]);
      scaled(i, j) = seq.moments[i + j] / d;
    }
  if (!scaled.allFinite()) throw DegenerateMomentsError("Hankel matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw DegenerateMomentsError("Hankel moment matrix is numerically singular (scaled condition " +
                                 std::to_string(lo > 0 ? hi / lo : INFINITY) + ")");

  std::vector<std::vector<Wide>> chol(n, std::vector<Wide>(n, Wide(0)));
  for (int j = 0; j < n; ++j) {
    Wide diag = seq.moments[2 * j];
    for (int k = 0; k < j; ++k) diag -= chol[j][k] * chol[j][k];
    if (diag <= 0) throw DegenerateMomentsError("Hankel moment matrix is not positive definite");
    chol[j][j] = mp::sqrt(diag);
    for (int i = j + 1; i < n; ++i) {
      Wide s = seq.moments[i + j];
      for (int k = 0; k < j; ++k) s -= chol[i][k] * chol[j][k];
      chol[i][j] = s / chol[j][j];
    }
  }

  // Rows of L^{-1} are the coefficient vectors: L^{-1} H L^{-T} = I.
  std::vector<std::vector<Wide>> inv(n, std::vector<Wide>(n, Wide(0)));
  for (int i = 0; i < n; ++i) {
    inv[i][i] = Wide(1) / chol[i][i];
    for (int j = i - 1; j >= 0; --j) {
      Wide s = 0;
      for (int k = j + 1; k <= i; ++k) s += inv[i][k] * chol[k][j];
      inv[i][j] = -s / chol[j][j];
    }
  }

  std::vector<Polynomial> out(n);
  for (int l = 0; l < n; ++l) {
    out[l].coeffs.resize(l + 1);
    for (int j = 0; j <= l; ++j) out[l].coeffs[j] = static_cast<double>(inv[l][j]);
  }
  return out;
}

Polynomial orthonormal_from_moments(const MomentSequence& seq, int l) {
  return orthonormal_basis_from_moments(seq, l).back();
}

namespace {

mp::cpp_int binomial(int top, int bottom) {
  if (bottom < 0 || top < 0 || bottom > top) return 0;
  mp::cpp_int r = 1;
  for (int i = 1; i <= bottom; ++i) {
    r *= top - bottom + i;
    r /= i;
  }
  return r;
}

}  // namespace

mp::cpp_int jl_dimension(int l, int p) {
  if (l < 0) throw UsageError("jl_dimension requires l >= 0");
  if (p < 2) throw UsageError("jl_dimension requires p >= 2");
  if (l == 0) return 1;
  if (l == 1) return p;
  return binomial(p + l - 1, l) - binomial(p + l - 3, l - 2);
}

}  // namespace kspec
