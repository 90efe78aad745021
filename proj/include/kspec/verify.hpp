#pragma once

#include "kspec/ensemble.hpp"
#include "kspec/limit_law.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kspec {

/// Distribution function of a density curve: trapezoid cumulative integral of
/// the continuous part plus exact jumps at the atoms.
class TheoryCdf {
 public:
  explicit TheoryCdf(const DensityCurve& curve);

  double operator()(double t) const;  // F(t), right-continuous
  double left_limit(double t) const;  // F(t-)
  double continuous(double t) const;  // continuous part only
  double total_mass() const { return total_; }
  /// Smallest t with F(t) >= u (atoms returned as their location).
  double quantile(double u) const;

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
  std::vector<double> cumulative_;
  std::vector<Atom> atoms_;
  double total_ = 0.0;
};

/// n points placed at the (i - 1/2)/n quantiles of the curve.
std::vector<double> quantile_sample(const DensityCurve& curve, int n);

/// Eigenvalues within `window` of an atom, moved onto the atom. Finite-p
/// samples spread an atom over a band of width O(p^{-1/2}).
std::vector<double> snap_to_atoms(std::span<const double> eigenvalues, std::span<const Atom> atoms, double window);

/// Default snapping window: zero without atoms; for the Gaussian model
/// 4 |a| sqrt(2/p) (the spread of |X_i|^2), otherwise 1e-9; always capped at
/// half the gap between an atom and the continuous support.
double default_atom_window(const DensityCurve& curve, VectorModel model, int p);

/// sup |F_n - F| over the sample, both one-sided limits checked at each
/// distinct eigenvalue. Throws UsageError when the curve misses its declared
/// normalization tolerance.
double cdf_sup_distance(std::span<const double> eigenvalues, const DensityCurve& curve, double atom_window = 0.0);
inline double cdf_sup_distance(const SpectrumSample& s, const DensityCurve& curve, double atom_window = 0.0) {
  return cdf_sup_distance(s.eigenvalues, curve, atom_window);
}

/// sum over equal-width bins of |empirical bin mass - theory bin mass|, on the
/// union of the curve range and the sample range. Equals the integrated L1
/// distance between the histogram and the bin-averaged curve.
double hist_l1(std::span<const double> eigenvalues, const DensityCurve& curve, int bins, double atom_window = 0.0);
inline double hist_l1(const SpectrumSample& s, const DensityCurve& curve, int bins, double atom_window = 0.0) {
  return hist_l1(s.eigenvalues, curve, bins, atom_window);
}

struct StieltjesPointError {
  cplx z;
  cplx empirical;
  cplx theory;
  double error = 0.0;
};

/// |m_A(z) - m(z)| for each z; every z needs Im z >= 0.1.
std::vector<StieltjesPointError> stieltjes_point_check(std::span<const double> eigenvalues, const ModelParams& params,
                                                      std::span<const cplx> z_list);

struct MomentErrors {
  double mean_abs = 0.0;       // |(1/n) sum lambda|
  double second_moment = 0.0;  // |(1/n) sum lambda^2 - nu/gamma|
};
MomentErrors moment_errors(std::span<const double> eigenvalues, const ModelParams& params);

// ---------------------------------------------------------------------------
// Sweeps

struct ConcentrationRow {
  int n = 0;
  int p = 0;
  cplx mean_m;
  double std_m = 0.0;  // sqrt of the sample variance of the complex m_A(z)
  std::vector<cplx> values;
  std::vector<std::uint64_t> seeds;
};

struct ConcentrationResult {
  cplx z;
  double gamma = 0.0;
  int trials = 0;
  std::vector<ConcentrationRow> rows;
  double slope = 0.0;  // least-squares slope of log std vs log n; NaN when some std is 0
  double intercept = 0.0;
  double ci_lo = 0.0;  // 95% percentile bootstrap interval of the slope
  double ci_hi = 0.0;
};

/// Standard deviation of m_A(z) across `trials` draws for each n (p = round(gamma n),
/// gamma = base.gamma() unless given). Trial t of every size uses the child
/// stream (base.seed, t).
ConcentrationResult concentration_sweep(const EnsembleConfig& base, cplx z, std::span<const int> sizes, int trials,
                                        int threads = 1, int bootstrap = 200,
                                        std::optional<double> gamma = std::nullopt);

/// Least-squares slope and intercept of y against x.
std::pair<double, double> least_squares(std::span<const double> x, std::span<const double> y);

struct NormGrowthRow {
  int n = 0;
  int p = 0;
  double mean_norm = 0.0;
  double ratio = 0.0;  // mean_norm / n^{1/4}
  double max_eigenvalue_mean = 0.0;
  std::vector<double> norms;
  std::vector<std::uint64_t> seeds;
};

struct NormGrowthResult {
  int l = 0;
  double gamma = 0.0;
  VectorModel model = VectorModel::gaussian;
  std::vector<NormGrowthRow> rows;
  bool ratio_nonincreasing = false;       // over all sizes
  bool ratio_nonincreasing_tail = false;  // beyond the two smallest sizes
  bool appears_bounded = false;           // informational: mean norm grows by < 10% end to end
  double linear_bound = std::numeric_limits<double>::quiet_NaN();  // (1 + gamma^{-1/2})^2 + 1 when l = 1
  bool linear_bound_ok = true;            // every observed norm below linear_bound (l = 1)
};

/// Kernel P_{l,p}, the degree-l orthonormal polynomial of the inner-product law
/// of `model` at dimension p (Hermite for the hypercube).
Kernel orthonormal_kernel(int l, int p, VectorModel model);

/// Spectral norms of the P_{l,p} kernel matrix across sizes.
NormGrowthResult norm_growth_sweep(int l, double gamma, std::span<const int> sizes, int trials, std::uint64_t seed,
                                   VectorModel model = VectorModel::gaussian, int threads = 1);

// ---------------------------------------------------------------------------
// Empirical vs theory comparison

struct ComparisonTolerances {
  double cdf = 0.05;
  double hist = std::numeric_limits<double>::quiet_NaN();       // NaN disables
  double stieltjes = std::numeric_limits<double>::quiet_NaN();  // NaN disables
};

struct ComparisonConfig {
  EnsembleConfig ensemble;
  ModelParams params;  // theory triple
  int trials = 1;
  int bins = 60;
  int grid_points = 4000;
  double atom_window = std::numeric_limits<double>::quiet_NaN();  // NaN: default_atom_window
  std::vector<cplx> z_list{cplx(0.0, 1.0), cplx(0.0, 2.0)};
  ComparisonTolerances tolerances;
  int threads = 1;
};

struct SeedMetrics {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  double cdf_sup_distance = 0.0;
  double cdf_sup_distance_strict = 0.0;
  double hist_l1 = 0.0;
  MomentErrors moments;
  std::vector<StieltjesPointError> stieltjes;
  double spectral_norm = 0.0;
  std::size_t replaced_nonfinite = 0;
};

struct ComparisonReport {
  ComparisonConfig config;
  Regime regime = Regime::cubic;
  double atom_window = 0.0;
  double normalization_error = 0.0;
  // Worst case over seeds.
  double cdf_sup_distance = 0.0;
  double cdf_sup_distance_strict = 0.0;
  double hist_l1 = 0.0;
  MomentErrors moments;
  std::vector<StieltjesPointError> stieltjes;  // max error per z
  std::vector<SeedMetrics> per_seed;
  bool pass = false;
  double wall_time = 0.0;
};

ComparisonReport compare(const ComparisonConfig& config);

}  // namespace kspec
