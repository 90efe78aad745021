#pragma once

#include <array>
#include <complex>
#include <span>

namespace kspec {

using cplx = std::complex<double>;

/// Roots of c2 x^2 + c1 x + c0 (c2 != 0), cancellation-free form.
std::array<cplx, 2> quadratic_roots(cplx c2, cplx c1, cplx c0);

/// Roots of c3 x^3 + c2 x^2 + c1 x + c0 (c3 != 0): Cardano on the monic form,
/// then Newton polishing against the original coefficients.
std::array<cplx, 3> cubic_roots(cplx c3, cplx c2, cplx c1, cplx c0);

/// |P(x)| / sum_k |c_k| |x|^k for coefficients given highest degree first.
double relative_residual(std::span<const cplx> coeffs_high_first, cplx x);

}  // namespace kspec
