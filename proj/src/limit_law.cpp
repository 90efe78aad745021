#include "kspec/limit_law.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace kspec {

namespace {

constexpr double kImagTol = 1e-9;
constexpr double kDegenerateGap = 1e-12;
constexpr double kCubicFloor = 1e-10;
constexpr double kCrossCheckTol = 1e-6;

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

}  // namespace

void ModelParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw UsageError("gamma must be positive");
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw UsageError("nu must be non-negative");
  if (!std::isfinite(a)) throw UsageError("a must be finite");
  if (nu < a * a - kDegenerateGap * std::max(1.0, a * a)) {
    std::ostringstream os;
    os << "nu must satisfy nu >= a^2 (got a = " << a << ", nu = " << nu << ")";
    throw UsageError(os.str());
  }
}

Regime classify(const ModelParams& params) {
  params.validate();
  if (params.a == 0.0) return params.nu == 0.0 ? Regime::point_mass : Regime::semicircle;
  const double gap = params.nu - params.a * params.a;
  if (std::abs(gap) <= kDegenerateGap) return Regime::marchenko_pastur;
  if (std::abs(params.a) * gap / params.gamma < kCubicFloor)
    return params.a * params.a < gap ? Regime::semicircle : Regime::marchenko_pastur;
  return Regime::cubic;
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::cubic:
      return "cubic";
    case Regime::semicircle:
      return "semicircle";
    case Regime::marchenko_pastur:
      return "marchenko_pastur";
    case Regime::point_mass:
      return "point_mass";
  }
  return "unknown";
}

std::array<cplx, 4> stieltjes_polynomial(const ModelParams& p, cplx z) {
  return {cplx(p.a * (p.nu - p.a * p.a) / p.gamma), p.nu + p.a * z, p.a + p.gamma * z, cplx(p.gamma)};
}

StieltjesSolution solve_m_detailed(const ModelParams& params, cplx z) {
  if (!(z.imag() > 0.0)) throw UsageError("solve_m requires Im z > 0");
  StieltjesSolution sol;
  sol.regime = classify(params);
  std::array<cplx, 4> poly{};
  int degree = 0;
  switch (sol.regime) {
    case Regime::point_mass:
      sol.m = -1.0 / z;
      sol.roots = {sol.m, 0.0, 0.0};
      sol.root_count = 1;
      poly = {0.0, 0.0, z, 1.0};
      sol.residual = relative_residual(std::span(poly).subspan(2), sol.m);
      return sol;
    case Regime::semicircle:
      poly = {0.0, params.nu / params.gamma, z, 1.0};
      degree = 2;
      break;
    case Regime::marchenko_pastur:
      poly = {0.0, params.nu + params.a * z, params.a + params.gamma * z, params.gamma};
      degree = 2;
      break;
    case Regime::cubic:
      poly = stieltjes_polynomial(params, z);
      degree = 3;
      break;
  }
  if (degree == 2) {
    const auto r = quadratic_roots(poly[1], poly[2], poly[3]);
    sol.roots = {r[0], r[1], 0.0};
  } else {
    sol.roots = cubic_roots(poly[0], poly[1], poly[2], poly[3]);
  }
  int selected = -1;
  for (int i = 0; i < degree; ++i) {
    if (sol.roots[i].imag() > kImagTol) {
      ++sol.root_count;
      selected = i;
    }
  }
  if (sol.root_count != 1) {
    std::ostringstream os;
    os << "expected exactly one root with Im m > 0, found " << sol.root_count << " (roots";
    for (int i = 0; i < degree; ++i) os << ' ' << sol.roots[i];
    os << ")";
    throw RootSelectionError(os.str(), sol.roots, sol.root_count);
  }
  sol.m = sol.roots[selected];
  sol.residual = relative_residual(std::span(poly).subspan(3 - degree), sol.m);
  if (sol.residual > 1e-10) {
    std::ostringstream os;
    os << "Stieltjes root residual " << sol.residual << " exceeds 1e-10";
    throw NumericalError(os.str());
  }
  return sol;
}

cplx solve_m(const ModelParams& params, cplx z) { return solve_m_detailed(params, z).m; }

CardanoTerms cardano_terms(const ModelParams& p, double u) {
  const double c3 = p.a * (p.nu - p.a * p.a) / p.gamma;
  const double c2 = p.nu + p.a * u;
  const double c1 = p.a + p.gamma * u;
  const double c0 = p.gamma;
  // D = Q^3 + R^2 = -disc / (108 c3^4); the discriminant of the unnormalized
  // cubic stays well scaled when c3 is small.
  const double disc = 18.0 * c3 * c2 * c1 * c0 - 4.0 * c2 * c2 * c2 * c0 + c2 * c2 * c1 * c1 -
                      4.0 * c3 * c1 * c1 * c1 - 27.0 * c3 * c3 * c0 * c0;
  const double c3sq = c3 * c3;
  CardanoTerms t;
  t.d = -disc / (108.0 * c3sq * c3sq);
  t.r = (9.0 * c3 * c2 * c1 - 27.0 * c3sq * c0 - 2.0 * c2 * c2 * c2) / (54.0 * c3sq * c3);
  t.q = (3.0 * c3 * c1 - c2 * c2) / (9.0 * c3sq);
  return t;
}

double density_explicit(const ModelParams& params, double u) {
  if (classify(params) != Regime::cubic)
    throw UsageError("density_explicit needs 0 < a^2 < nu; use the semicircle or linear-kernel law");
  const CardanoTerms t = cardano_terms(params, u);
  if (!(t.d > 0.0)) return 0.0;
  const double root_d = std::sqrt(t.d);
  const double s = std::cbrt(t.r + root_d);
  const double w = std::cbrt(t.r - root_d);
  // s - w written as (s^3 - w^3) / (s^2 + s w + w^2) to avoid cancellation.
  const double denom = s * s + s * w + w * w;
  if (!(denom > 0.0)) return 0.0;
  const double y = std::sqrt(3.0) / 2.0 * (2.0 * root_d / denom);
  return y / std::numbers::pi;
}

MpValue density_mp(double t, double y) {
  if (!(y > 0.0)) throw UsageError("Marcenko-Pastur ratio must be positive");
  MpValue v;
  v.atom = std::max(0.0, 1.0 - 1.0 / y);
  if (t == 0.0) return v;
  const double root = std::sqrt(y);
  const double lo = (1.0 - root) * (1.0 - root);
  const double hi = (1.0 + root) * (1.0 + root);
  const double prod = std::max(hi - t, 0.0) * std::max(t - lo, 0.0);
  v.density = std::sqrt(prod) / (2.0 * std::numbers::pi * y * t);
  return v;
}

LawPoint density_linear_kernel(double t, double a, double gamma) {
  if (a == 0.0) throw UsageError("linear-kernel law needs a != 0");
  if (!(gamma > 0.0)) throw UsageError("gamma must be positive");
  LawPoint out;
  out.density = density_mp((t + a) / a, 1.0 / gamma).density / std::abs(a);
  if (gamma < 1.0) out.atom = Atom{-a, 1.0 - gamma};
  return out;
}

double density_semicircle(double t, double nu, double gamma) {
  if (!(nu > 0.0)) throw UsageError("semicircle needs nu > 0");
  if (!(gamma > 0.0)) throw UsageError("gamma must be positive");
  const double var = nu / gamma;
  return std::sqrt(std::max(4.0 * var - t * t, 0.0)) / (2.0 * std::numbers::pi * var);
}

std::vector<Interval> support_intervals(const ModelParams& params) {
  if (classify(params) != Regime::cubic) throw UsageError("support_intervals needs 0 < a^2 < nu");
  auto positive = [&](double u) { return cardano_terms(params, u).d > 0.0; };
  double span = std::abs(params.a) + 2.0 * std::sqrt(params.nu / params.gamma) + 4.0 * std::sqrt(params.nu);
  constexpr int kScan = 20000;
  for (int attempt = 0; attempt < 6; ++attempt, span *= 2.0) {
    if (positive(-span) || positive(span)) continue;
    std::vector<Interval> out;
    const double h = 2.0 * span / kScan;
    auto refine = [&](double lo, double hi) {  // positive(lo) != positive(hi)
      const bool lo_pos = positive(lo);
      while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (positive(mid) == lo_pos ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    };
    bool prev = false;
    double start = 0.0;
    for (int i = 1; i <= kScan; ++i) {
      const double u0 = -span + (i - 1) * h;
      const double u1 = (i == kScan) ? span : -span + i * h;
      const bool cur = positive(u1);
      if (cur != prev) {
        const double edge = refine(u0, u1);
        if (cur)
          start = edge;
        else
          out.push_back({start, edge});
      }
      prev = cur;
    }
    return out;
  }
  throw NumericalError("support scan did not close: density positive at the scan boundary");
}

std::vector<Interval> support(const ModelParams& params) {
  switch (classify(params)) {
    case Regime::point_mass:
      return {};
    case Regime::semicircle: {
      const double radius = 2.0 * std::sqrt(params.nu / params.gamma);
      return {{-radius, radius}};
    }
    case Regime::marchenko_pastur: {
      const double root = std::sqrt(1.0 / params.gamma);
      const double lo = params.a * ((1.0 - root) * (1.0 - root) - 1.0);
      const double hi = params.a * ((1.0 + root) * (1.0 + root) - 1.0);
      return {{std::min(lo, hi), std::max(lo, hi)}};
    }
    case Regime::cubic:
      return support_intervals(params);
  }
  return {};
}

std::vector<Atom> atoms(const ModelParams& params) {
  switch (classify(params)) {
    case Regime::point_mass:
      return {{0.0, 1.0}};
    case Regime::marchenko_pastur:
      if (params.gamma < 1.0) return {{-params.a, 1.0 - params.gamma}};
      return {};
    default:
      return {};
  }
}

double density(const ModelParams& params, double u) {
  switch (classify(params)) {
    case Regime::point_mass:
      return 0.0;
    case Regime::semicircle:
      return density_semicircle(u, params.nu, params.gamma);
    case Regime::marchenko_pastur:
      return density_linear_kernel(u, params.a, params.gamma).density;
    case Regime::cubic:
      return density_explicit(params, u);
  }
  return 0.0;
}

double DensityCurve::mass() const {
  double total = trapezoid(grid, values);
  for (const auto& at : atoms) total += at.mass;
  return total;
}

double DensityCurve::mean() const {
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) w[i] = grid[i] * values[i];
  double total = trapezoid(grid, w);
  for (const auto& at : atoms) total += at.mass * at.location;
  return total;
}

double DensityCurve::second_moment() const {
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) w[i] = grid[i] * grid[i] * values[i];
  double total = trapezoid(grid, w);
  for (const auto& at : atoms) total += at.mass * at.location * at.location;
  return total;
}

DensityCurve density_curve(const ModelParams& params, std::span<const double> grid) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw UsageError("density grid must be strictly increasing");
  DensityCurve curve;
  curve.params = params;
  curve.regime = classify(params);
  curve.grid.assign(grid.begin(), grid.end());
  curve.values.resize(grid.size());
  curve.atoms = atoms(params);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double u = grid[i];
    const double rho = density(params, u);
    if (curve.regime == Regime::cubic) {
      const auto c = stieltjes_polynomial(params, cplx(u, 0.0));
      const auto roots = cubic_roots(c[0], c[1], c[2], c[3]);
      double im = 0.0;
      for (const auto& r : roots) im = std::max(im, r.imag());
      const double check = im / std::numbers::pi;
      if (std::abs(check - rho) > kCrossCheckTol) {
        std::ostringstream os;
        os << "density curve rejected: explicit formula " << rho << " and cubic root " << check
           << " disagree at u = " << u;
        throw NumericalError(os.str());
      }
    }
    curve.values[i] = rho;
  }
  curve.normalization_error = std::abs(curve.mass() - 1.0);
  return curve;
}

std::vector<double> default_grid(const ModelParams& params, int points) {
  if (points < 50) throw UsageError("default grid needs at least 50 points");
  auto intervals = support(params);
  std::vector<double> grid;
  if (intervals.empty()) {
    for (int i = 0; i < points; ++i) grid.push_back(-1.0 + 2.0 * i / (points - 1));
    return grid;
  }
  double lo = intervals.front().lo, hi = intervals.back().hi;
  for (const auto& at : atoms(params)) {
    lo = std::min(lo, at.location);
    hi = std::max(hi, at.location);
  }
  const double margin = 0.05 * (hi - lo);
  const int side = std::max(5, points / 50);
  const int gap_points = 5;
  const int inner = points - 2 * side - gap_points * static_cast<int>(intervals.size() - 1);
  double covered = 0.0;
  for (const auto& iv : intervals) covered += iv.hi - iv.lo;

  for (int i = 0; i < side; ++i) grid.push_back(lo - margin + margin * i / side);
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const auto& iv = intervals[k];
    const int m = std::max(20, static_cast<int>(inner * (iv.hi - iv.lo) / covered));
    const double mid = 0.5 * (iv.lo + iv.hi), half = 0.5 * (iv.hi - iv.lo);
    for (int j = 0; j < m; ++j) grid.push_back(mid - half * std::cos(std::numbers::pi * j / (m - 1)));
    if (k + 1 < intervals.size()) {
      const double g0 = iv.hi, g1 = intervals[k + 1].lo;
      for (int j = 1; j <= gap_points; ++j) grid.push_back(g0 + (g1 - g0) * j / (gap_points + 1));
    }
  }
  for (int i = 1; i <= side; ++i) grid.push_back(hi + margin * i / side);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace kspec
