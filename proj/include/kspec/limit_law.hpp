#pragma once

#include "kspec/cubic.hpp"
#include "kspec/errors.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kspec {

/// The triple (a, nu, gamma) that fixes the limiting spectral law.
struct ModelParams {
  double a = 0.0;
  double nu = 1.0;
  double gamma = 1.0;

  /// Throws UsageError unless gamma > 0, nu >= 0 and nu >= a^2 (up to 1e-12 relative).
  void validate() const;
};

enum class Regime {
  cubic,             // 0 < a^2 < nu
  semicircle,        // a = 0
  marchenko_pastur,  // nu = a^2, a != 0
  point_mass,        // a = nu = 0: the zero matrix
};

/// Regime used for a parameter triple. Near-degenerate triples whose cubic
/// coefficient |a| (nu - a^2) / gamma falls below 1e-10 are routed to the
/// closer degenerate law.
Regime classify(const ModelParams& params);
std::string to_string(Regime regime);

/// Thrown when root selection does not find exactly one root in the upper half plane.
class RootSelectionError : public NumericalError {
 public:
  RootSelectionError(const std::string& what, std::array<cplx, 3> roots, int count)
      : NumericalError(what), roots_(roots), count_(count) {}
  const std::array<cplx, 3>& roots() const { return roots_; }
  int root_count() const { return count_; }

 private:
  std::array<cplx, 3> roots_;
  int count_;
};

struct StieltjesSolution {
  cplx m;
  Regime regime = Regime::cubic;
  std::array<cplx, 3> roots{};  // unused trailing entries are zero for quadratics
  int root_count = 0;
  double residual = 0.0;        // relative residual of the dispatched polynomial
};

/// Solves a(nu-a^2)/gamma m^3 + (nu + a z) m^2 + (a + gamma z) m + gamma = 0 (and
/// its quadratic degenerations) for the unique root with Im m > 0.
StieltjesSolution solve_m_detailed(const ModelParams& params, cplx z);
cplx solve_m(const ModelParams& params, cplx z);

/// Polynomial coefficients of the Stieltjes equation at z, highest degree first.
std::array<cplx, 4> stieltjes_polynomial(const ModelParams& params, cplx z);

/// Cardano quantities of the real cubic at z = u.
struct CardanoTerms {
  double q = 0.0;
  double r = 0.0;
  double d = 0.0;  // Q^3 + R^2
};
CardanoTerms cardano_terms(const ModelParams& params, double u);

/// Limiting density in the cubic regime, from the closed-form imaginary part of
/// the complex root pair. Throws UsageError outside 0 < a^2 < nu.
double density_explicit(const ModelParams& params, double u);

struct Atom {
  double location = 0.0;
  double mass = 0.0;
};

struct MpValue {
  double density = 0.0;  // continuous part
  double atom = 0.0;     // mass of the atom at 0
};

/// Marcenko-Pastur law with ratio y: continuous part and atom at the origin.
MpValue density_mp(double t, double y);

struct LawPoint {
  double density = 0.0;
  std::optional<Atom> atom;
};

/// Law of the zero-diagonal linear kernel a*xi at aspect ratio gamma.
LawPoint density_linear_kernel(double t, double a, double gamma);

/// Semicircle of variance nu/gamma.
double density_semicircle(double t, double nu, double gamma);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Maximal intervals where D(u) > 0 in the cubic regime (scan plus bisection to 1e-9).
std::vector<Interval> support_intervals(const ModelParams& params);

/// Support of the continuous part for any regime.
std::vector<Interval> support(const ModelParams& params);

/// Atoms of the law for any regime.
std::vector<Atom> atoms(const ModelParams& params);

/// Limiting density at u for any regime (continuous part only).
double density(const ModelParams& params, double u);

struct DensityCurve {
  ModelParams params;
  Regime regime = Regime::cubic;
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<Atom> atoms;
  double tolerance = 1e-3;          // declared normalization tolerance
  double normalization_error = 0.0; // |trapezoid mass + atoms - 1|

  double mass() const;           // trapezoid integral plus atoms
  double second_moment() const;  // trapezoid of t^2 rho plus atoms
  double mean() const;
};

/// Density sampled on `grid` (strictly increasing) with regime dispatch.
/// Cubic-regime values are cross-checked against the imaginary part of the
/// selected cubic root; a disagreement above 1e-6 rejects the curve.
DensityCurve density_curve(const ModelParams& params, std::span<const double> grid);

/// Grid covering the support with 5% margins and points clustered toward
/// support edges.
std::vector<double> default_grid(const ModelParams& params, int points = 4000);

}  // namespace kspec
