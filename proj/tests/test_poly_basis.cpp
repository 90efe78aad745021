#include "kspec/errors.hpp"
#include "kspec/expansion.hpp"
#include "kspec/kernels.hpp"
#include "kspec/poly_basis.hpp"
#include "kspec/quadrature.hpp"
#include "kspec/rng.hpp"

#include <doctest.h>

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <numbers>

using namespace kspec;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

namespace {

// He_l in exact rationals, from the three-term recurrence.
std::vector<std::vector<cpp_rational>> rational_hermite(int max_l) {
  std::vector<std::vector<cpp_rational>> he{{1}, {0, 1}};
  for (int l = 1; l < max_l; ++l) {
    std::vector<cpp_rational> next(static_cast<std::size_t>(l + 2), 0);
    for (int j = 0; j <= l; ++j) next[static_cast<std::size_t>(j + 1)] += he[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
    for (int j = 0; j <= l - 1; ++j) next[static_cast<std::size_t>(j)] -= l * he[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(j)];
    he.push_back(next);
  }
  return he;
}

// Number of monomials of degree l in p variables, by recursion on the first exponent.
cpp_int count_monomials(int l, int p) {
  if (l < 0) return 0;
  if (p == 1) return 1;
  cpp_int total = 0;
  for (int e = 0; e <= l; ++e) total += count_monomials(l - e, p - 1);
  return total;
}

double max_coeff_diff(const Polynomial& a, const Polynomial& b) {
  double d = 0.0;
  const std::size_t n = std::max(a.coeffs.size(), b.coeffs.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i < a.coeffs.size() ? a.coeffs[i] : 0.0;
    const double y = i < b.coeffs.size() ? b.coeffs[i] : 0.0;
    d = std::max(d, std::abs(x - y));
  }
  return d;
}

}  // namespace

TEST_CASE("hermite_orthonormal low degrees") {
  const auto h0 = hermite_orthonormal(0);
  CHECK(h0.coeffs == std::vector<double>{1.0});
  const auto h1 = hermite_orthonormal(1);
  CHECK(h1(0.7) == doctest::Approx(0.7).epsilon(1e-15));
  const auto h2 = hermite_orthonormal(2);
  CHECK(h2(1.3) == doctest::Approx((1.3 * 1.3 - 1.0) / std::sqrt(2.0)).epsilon(1e-14));
  const auto h3 = hermite_orthonormal(3);
  CHECK(h3(2.0) == doctest::Approx((8.0 - 6.0) / std::sqrt(6.0)).epsilon(1e-14));
  CHECK_THROWS_AS(hermite_orthonormal(-1), UsageError);
}

TEST_CASE("hermite coefficients match exact rationals") {
  const auto he = rational_hermite(20);
  for (int l = 0; l <= 20; ++l) {
    const auto h = hermite_orthonormal(l);
    cpp_rational fact = 1;
    for (int j = 2; j <= l; ++j) fact *= j;
    const double norm = std::sqrt(static_cast<double>(fact));
    for (int j = 0; j <= l; ++j) {
      const double exact = static_cast<double>(he[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)]) / norm;
      CHECK(h.coeffs[static_cast<std::size_t>(j)] == doctest::Approx(exact).epsilon(1e-14).scale(1.0));
    }
  }
}

TEST_CASE("orthonormality under a 200-node rule") {
  const auto rule = gauss_hermite_rule(200);
  const auto basis = hermite_basis(12);
  double worst = 0.0;
  for (int i = 0; i <= 12; ++i)
    for (int j = 0; j <= 12; ++j) {
      const double ip = rule.apply([&](double x) { return basis[i](x) * basis[j](x); });
      worst = std::max(worst, std::abs(ip - (i == j ? 1.0 : 0.0)));
    }
  CHECK(worst <= 1e-10);
}

TEST_CASE("derivative identity h_l' = sqrt(l) h_{l-1}") {
  const auto he = rational_hermite(30);
  for (int l = 1; l <= 30; ++l) {
    // Exact: He_l' = l He_{l-1}.
    const auto& p = he[static_cast<std::size_t>(l)];
    const auto& q = he[static_cast<std::size_t>(l - 1)];
    for (int j = 1; j <= l; ++j)
      CHECK(p[static_cast<std::size_t>(j)] * j == l * q[static_cast<std::size_t>(j - 1)]);
  }
  for (int l = 1; l <= 16; ++l) {
    const auto d = derivative(hermite_orthonormal(l));
    auto expect = hermite_orthonormal(l - 1);
    for (double& c : expect.coeffs) c *= std::sqrt(static_cast<double>(l));
    double scale = 1.0;
    for (double c : expect.coeffs) scale = std::max(scale, std::abs(c));
    CHECK(max_coeff_diff(d, expect) <= 1e-12 * scale);
  }
}

TEST_CASE("eval_poly is Horner evaluation") {
  const Polynomial p{{1.0, -2.0, 0.5}};
  CHECK(eval_poly(p, 2.0) == doctest::Approx(1.0 - 4.0 + 2.0));
  CHECK(eval_poly(Polynomial{}, 3.0) == 0.0);
  CHECK(eval_poly(hermite_orthonormal(2), 1.0) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("gaussian_inner_moments") {
  const auto m = gaussian_inner_moments(10, 8);
  CHECK(m.moments[0] == 1.0);
  CHECK(m.moments[1] == 0.0);
  CHECK(m.moments[2] == doctest::Approx(1.0));
  CHECK(m.moments[4] == doctest::Approx(3.0 * (1.0 + 2.0 / 10)));
  CHECK(m.moments[6] == doctest::Approx(15.0 * (1.0 + 2.0 / 10) * (1.0 + 4.0 / 10)));
  CHECK(m.moments[7] == 0.0);
  CHECK_THROWS_AS(gaussian_inner_moments(0, 4), UsageError);
}

TEST_CASE("sphere_inner_moments") {
  const auto m = sphere_inner_moments(10, 6);
  CHECK(m.moments[2] == doctest::Approx(1.0));
  CHECK(m.moments[4] == doctest::Approx(3.0 / (1.0 + 2.0 / 10)));
  // p = 3: sqrt(3) times a uniform coordinate on [-1, 1], so mu_4 = 9/5.
  CHECK(sphere_inner_moments(3, 4).moments[4] == doctest::Approx(9.0 / 5.0));
  CHECK_THROWS_AS(sphere_inner_moments(1, 4), UsageError);
}

TEST_CASE("sphere moments times norm moments squared equal gaussian moments") {
  for (int p : {2, 5, 17, 400}) {
    const auto g = gaussian_inner_moments(p, 16);
    const auto s = sphere_inner_moments(p, 16);
    for (int m = 1; m <= 8; ++m) {
      const double norm = static_cast<double>(gaussian_norm_moment_exact(p, m));
      CHECK(s.moments[2 * m] * norm * norm == doctest::Approx(g.moments[2 * m]).epsilon(1e-14));
    }
  }
  CHECK(gaussian_norm_moment_exact(4, 2) == cpp_rational(3, 2));
}

TEST_CASE("gaussian inner moments against paired-vector Monte Carlo at p = 5") {
  const int p = 5;
  const int samples = 400000;
  Rng rng(derive_seed(2024, 5));
  std::vector<double> sum(9, 0.0);
  std::vector<double> sq(9, 0.0);
  for (int s = 0; s < samples; ++s) {
    double dot = 0.0;
    for (int j = 0; j < p; ++j) dot += rng.normal() * rng.normal();
    const double xi = dot / std::sqrt(static_cast<double>(p));
    double pw = 1.0;
    for (int k = 1; k <= 8; ++k) {
      pw *= xi;
      sum[k] += pw;
      sq[k] += pw * pw;
    }
  }
  const auto m = gaussian_inner_moments(p, 8);
  for (int k = 1; k <= 8; ++k) {
    const double mean = sum[k] / samples;
    const double se = std::sqrt((sq[k] / samples - mean * mean) / samples);
    CHECK(std::abs(mean - m.moments[k]) <= 4.0 * se);
  }
}

TEST_CASE("orthonormal_from_moments reproduces the degree-2 closed form") {
  for (int p : {10, 100, 1000}) {
    const auto poly = orthonormal_from_moments(gaussian_inner_moments(p, 4), 2);
    const double s = std::sqrt(2.0 + 6.0 / p);
    CHECK(max_coeff_diff(poly, Polynomial{{-1.0 / s, 0.0, 1.0 / s}}) <= 1e-10);
  }
  // Unit Gaussian moments give back the Hermite basis.
  const auto basis = orthonormal_basis_from_moments(unit_gaussian_moments(24), 12);
  for (int l = 0; l <= 12; ++l) CHECK(max_coeff_diff(basis[l], hermite_orthonormal(l)) <= 1e-9);
}

TEST_CASE("orthonormal polynomials are orthonormal against their own moments") {
  const auto ms = sphere_inner_moments(7, 24);
  const auto basis = orthonormal_basis_from_moments(ms, 12);
  for (int i = 0; i <= 12; i += 3)
    for (int j = 0; j <= 12; ++j) {
      double ip = 0.0;
      for (std::size_t a = 0; a < basis[i].coeffs.size(); ++a)
        for (std::size_t b = 0; b < basis[j].coeffs.size(); ++b)
          ip += basis[i].coeffs[a] * basis[j].coeffs[b] * ms.moments[a + b];
      CHECK(ip == doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0).epsilon(1e-8));
    }
}

TEST_CASE("degenerate moment sequences are rejected") {
  // Two-point law at +-1: every even moment is 1, so degree 2 is degenerate.
  MomentSequence two_point{MomentModel::unit_gaussian, std::nullopt, {1, 0, 1, 0, 1}};
  CHECK_THROWS_AS(orthonormal_from_moments(two_point, 2), DegenerateMomentsError);
  CHECK_THROWS_AS(orthonormal_from_moments(unit_gaussian_moments(4), 3), UsageError);
}

TEST_CASE("drift of P_{l,p} towards h_l halves when p doubles") {
  for (MomentModel model : {MomentModel::gaussian_inner, MomentModel::sphere_inner}) {
    for (int l = 2; l <= 6; ++l) {
      for (int p : {50, 100, 200}) {
        const double d1 = max_coeff_diff(orthonormal_from_moments(model_moments(model, p, 2 * l), l), hermite_orthonormal(l));
        const double d2 =
            max_coeff_diff(orthonormal_from_moments(model_moments(model, 2 * p, 2 * l), l), hermite_orthonormal(l));
        const double ratio = d1 / d2;
        CAPTURE(l);
        CAPTURE(p);
        CHECK(ratio >= 1.5);
        CHECK(ratio <= 2.5);
      }
    }
    // Degree one never drifts: the second moment is exactly 1 for both laws.
    CHECK(max_coeff_diff(orthonormal_from_moments(model_moments(model, 50, 2), 1), hermite_orthonormal(1)) <= 1e-15);
  }
}

TEST_CASE("jl_dimension") {
  CHECK(jl_dimension(0, 7) == 1);
  CHECK(jl_dimension(1, 7) == 7);
  CHECK(jl_dimension(2, 3) == 5);
  for (int p = 2; p <= 9; ++p)
    for (int l = 0; l <= 8; ++l) CHECK(jl_dimension(l, p) == count_monomials(l, p) - count_monomials(l - 2, p));
  // Far beyond 64-bit range, still exact.
  CHECK(jl_dimension(60, 100000) > cpp_int(1) << 200);
  CHECK_THROWS_AS(jl_dimension(2, 1), UsageError);
}

TEST_CASE("expansion coefficients of the sign kernel") {
  const auto c = expansion_coefficients(Kernel::sign(), ExpansionBasis::hermite(), 6, gauss_hermite_rule(64));
  CHECK(c[1] == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-9));
  CHECK(std::abs(c[2]) <= 1e-12);
  CHECK(std::abs(c[4]) <= 1e-12);
  // Independent oracle: composite Simpson of 2 h_3(x) phi(x) on [0, 12].
  const auto h3 = hermite_orthonormal(3);
  const int steps = 200000;
  const double h = 12.0 / steps;
  double acc = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double x = i * h;
    const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * h3(x) * std::exp(-0.5 * x * x);
  }
  const double oracle = 2.0 * acc * h / 3.0 / std::sqrt(2.0 * std::numbers::pi);
  CHECK(c[3] == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(c[3] == doctest::Approx(-std::sqrt(2.0 / std::numbers::pi) / std::sqrt(6.0)).epsilon(1e-9));
}

TEST_CASE("Parseval: partial sums of squared coefficients never exceed the variance") {
  // Singular kernels converge slowly, so only monotone approach is asserted.
  for (const Kernel& k : {parse_kernel("sign"), parse_kernel("power_even:r=0.25"), parse_kernel("power_odd:r=0.25")}) {
    const auto lc = limit_constants(k);
    const auto c = expansion_coefficients(k, ExpansionBasis::hermite(), 24, gauss_hermite_rule(64));
    double gap_at_8 = 0.0;
    double partial = 0.0;
    double previous_gap = lc.nu;
    for (std::size_t l = 1; l < c.size(); ++l) {
      partial += c[l] * c[l];
      CHECK(partial <= lc.nu + 1e-9);
      CHECK(lc.nu - partial <= previous_gap + 1e-12);
      previous_gap = lc.nu - partial;
      if (l == 8) gap_at_8 = previous_gap;
    }
    CHECK(previous_gap < gap_at_8);
  }
}

TEST_CASE("finite-p expansion against the model law") {
  const auto ms = gaussian_inner_moments(400, 12);
  const auto a = inner_expansion_coefficients(parse_kernel("linear:c=2"), ms, 6);
  CHECK(a[1] == doctest::Approx(2.0).epsilon(1e-9));
  for (int l : {0, 2, 3, 4, 5, 6}) CHECK(std::abs(a[l]) <= 1e-9);
}
