#include "kspec/cubic.hpp"

#include "kspec/errors.hpp"

#include <cmath>
#include <numbers>

namespace kspec {

std::array<cplx, 2> quadratic_roots(cplx c2, cplx c1, cplx c0) {
  if (c2 == 0.0) throw UsageError("quadratic_roots: leading coefficient is zero");
  const cplx disc = std::sqrt(c1 * c1 - 4.0 * c2 * c0);
  // Pick the sign that avoids cancellation in -c1 -+ disc.
  const cplx q = (std::real(std::conj(c1) * disc) >= 0.0) ? -0.5 * (c1 + disc) : -0.5 * (c1 - disc);
  if (q == 0.0) return {cplx(0.0), cplx(0.0)};
  return {q / c2, c0 / q};
}

double relative_residual(std::span<const cplx> coeffs, cplx x) {
  cplx value = 0.0;
  double scale = 0.0;
  const double ax = std::abs(x);
  for (const cplx& c : coeffs) {
    value = value * x + c;
    scale = scale * ax + std::abs(c);
  }
  return scale == 0.0 ? 0.0 : std::abs(value) / scale;
}

namespace {

void polish(std::array<cplx, 4> const& c, cplx& x) {
  auto eval = [&](cplx t, cplx& deriv) {
    cplx v = c[0];
    deriv = 0.0;
    for (int k = 1; k < 4; ++k) {
      deriv = deriv * t + v;
      v = v * t + c[k];
    }
    return v;
  };
  for (int iter = 0; iter < 8; ++iter) {
    cplx d;
    const cplx v = eval(x, d);
    if (v == 0.0 || d == 0.0) return;
    const cplx next = x - v / d;
    cplx dn;
    if (std::abs(eval(next, dn)) >= std::abs(v)) return;
    x = next;
  }
}

}  // namespace

std::array<cplx, 3> cubic_roots(cplx c3, cplx c2, cplx c1, cplx c0) {
  if (c3 == 0.0) throw UsageError("cubic_roots: leading coefficient is zero");
  const cplx A = c2 / c3, B = c1 / c3, C = c0 / c3;
  // x = y - A/3 gives y^3 + P y + Q = 0.
  const cplx P = B - A * A / 3.0;
  const cplx Q = 2.0 * A * A * A / 27.0 - A * B / 3.0 + C;
  const cplx disc = std::sqrt(Q * Q / 4.0 + P * P * P / 27.0);
  cplx w = -Q / 2.0 + disc;
  const cplx w_alt = -Q / 2.0 - disc;
  if (std::abs(w_alt) > std::abs(w)) w = w_alt;
  const cplx omega(-0.5, std::sqrt(3.0) / 2.0);
  std::array<cplx, 3> roots;
  if (w == 0.0) {
    // P = Q = 0: triple root.
    roots = {-A / 3.0, -A / 3.0, -A / 3.0};
  } else {
    cplx u = std::pow(w, 1.0 / 3.0);
    cplx uk = u;
    for (int k = 0; k < 3; ++k) {
      const cplx v = -P / (3.0 * uk);
      roots[k] = uk + v - A / 3.0;
      uk *= omega;
    }
  }
  const std::array<cplx, 4> coeffs{c3, c2, c1, c0};
  for (auto& r : roots) polish(coeffs, r);
  return roots;
}

}  // namespace kspec
