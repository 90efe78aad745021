#include "kspec/verify.hpp"

#include "kspec/errors.hpp"
#include "kspec/parallel.hpp"
#include "kspec/poly_basis.hpp"
#include "kspec/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace kspec {

TheoryCdf::TheoryCdf(const DensityCurve& curve)
    : grid_(curve.grid), values_(curve.values), atoms_(curve.atoms) {
  if (grid_.size() < 2 || grid_.size() != values_.size()) throw UsageError("density curve needs at least two grid points");
  cumulative_.assign(grid_.size(), 0.0);
  for (std::size_t k = 1; k < grid_.size(); ++k)
    cumulative_[k] = cumulative_[k - 1] + 0.5 * (values_[k] + values_[k - 1]) * (grid_[k] - grid_[k - 1]);
  std::sort(atoms_.begin(), atoms_.end(), [](const Atom& x, const Atom& y) { return x.location < y.location; });
  total_ = cumulative_.back();
  for (const auto& atom : atoms_) total_ += atom.mass;
}

double TheoryCdf::continuous(double t) const {
  if (t <= grid_.front()) return 0.0;
  if (t >= grid_.back()) return cumulative_.back();
  const auto k = static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), t) - grid_.begin()) - 1;
  const double h = t - grid_[k];
  const double slope = (values_[k + 1] - values_[k]) / (grid_[k + 1] - grid_[k]);
  return cumulative_[k] + h * (values_[k] + 0.5 * slope * h);
}

double TheoryCdf::operator()(double t) const {
  double f = continuous(t);
  for (const auto& atom : atoms_)
    if (atom.location <= t) f += atom.mass;
  return f;
}

double TheoryCdf::left_limit(double t) const {
  double f = continuous(t);
  for (const auto& atom : atoms_)
    if (atom.location < t) f += atom.mass;
  return f;
}

double TheoryCdf::quantile(double u) const {
  double lo = grid_.front();
  double hi = grid_.back();
  for (const auto& atom : atoms_) {
    lo = std::min(lo, atom.location);
    hi = std::max(hi, atom.location);
  }
  if (u <= 0.0) return lo;
  if ((*this)(hi) < u) return hi;
  for (const auto& atom : atoms_)
    if (left_limit(atom.location) < u && (*this)(atom.location) >= u) return atom.location;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((*this)(mid) >= u)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

std::vector<double> quantile_sample(const DensityCurve& curve, int n) {
  if (n < 1) throw UsageError("quantile_sample needs n >= 1");
  const TheoryCdf cdf(curve);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = cdf.quantile((i + 0.5) / n * cdf.total_mass());
  return out;
}

std::vector<double> snap_to_atoms(std::span<const double> eigenvalues, std::span<const Atom> atoms, double window) {
  std::vector<double> out(eigenvalues.begin(), eigenvalues.end());
  if (!(window > 0.0)) return out;
  for (double& lambda : out)
    for (const auto& atom : atoms)
      if (std::abs(lambda - atom.location) <= window) {
        lambda = atom.location;
        break;
      }
  return out;
}

double default_atom_window(const DensityCurve& curve, VectorModel model, int p) {
  if (curve.atoms.empty()) return 0.0;
  double window = 1e-9;
  if (model == VectorModel::gaussian) window = 4.0 * std::abs(curve.params.a) * std::sqrt(2.0 / p);
  for (const auto& atom : curve.atoms) {
    window = std::max(window, 1e-9 * std::max(1.0, std::abs(atom.location)));
    for (const auto& iv : support(curve.params)) {
      double gap = 0.0;
      if (atom.location < iv.lo)
        gap = iv.lo - atom.location;
      else if (atom.location > iv.hi)
        gap = atom.location - iv.hi;
      if (gap > 0.0) window = std::min(window, 0.5 * gap);
    }
  }
  return window;
}

namespace {

void require_normalized(const DensityCurve& curve) {
  if (curve.normalization_error > curve.tolerance)
    throw UsageError("density curve normalization error " + std::to_string(curve.normalization_error) +
                     " exceeds its tolerance " + std::to_string(curve.tolerance));
}

}  // namespace

double cdf_sup_distance(std::span<const double> eigenvalues, const DensityCurve& curve, double atom_window) {
  if (eigenvalues.empty()) throw UsageError("cdf_sup_distance needs at least one eigenvalue");
  require_normalized(curve);
  const TheoryCdf cdf(curve);
  std::vector<double> x = snap_to_atoms(eigenvalues, curve.atoms, atom_window);
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double sup = 0.0;
  std::size_t i = 0;
  while (i < x.size()) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    sup = std::max(sup, std::abs(static_cast<double>(i) / n - cdf.left_limit(x[i])));
    sup = std::max(sup, std::abs(static_cast<double>(j) / n - cdf(x[i])));
    i = j;
  }
  return std::min(sup, 1.0);
}

double hist_l1(std::span<const double> eigenvalues, const DensityCurve& curve, int bins, double atom_window) {
  if (bins < 1) throw UsageError("hist_l1 needs at least one bin");
  if (eigenvalues.empty()) throw UsageError("hist_l1 needs at least one eigenvalue");
  require_normalized(curve);
  const TheoryCdf cdf(curve);
  const std::vector<double> x = snap_to_atoms(eigenvalues, curve.atoms, atom_window);
  double lo = std::min(curve.grid.front(), *std::min_element(x.begin(), x.end()));
  double hi = std::max(curve.grid.back(), *std::max_element(x.begin(), x.end()));
  for (const auto& atom : curve.atoms) {
    lo = std::min(lo, atom.location);
    hi = std::max(hi, atom.location);
  }
  const Histogram h = esd_histogram(x, bins, lo, hi);
  const double w = h.width();
  double total = 0.0;
  for (int k = 0; k < bins; ++k) {
    const double left = lo + k * w;
    const double right = k + 1 == bins ? hi : lo + (k + 1) * w;
    const double theory = (k + 1 == bins ? cdf(right) : cdf.left_limit(right)) - cdf.left_limit(left);
    total += std::abs(h.heights[static_cast<std::size_t>(k)] * w - theory);
  }
  return total;
}

std::vector<StieltjesPointError> stieltjes_point_check(std::span<const double> eigenvalues, const ModelParams& params,
                                                      std::span<const cplx> z_list) {
  std::vector<StieltjesPointError> out;
  for (const cplx z : z_list) {
    if (z.imag() < 0.1) throw UsageError("stieltjes_point_check needs Im z >= 0.1");
    StieltjesPointError e;
    e.z = z;
    e.empirical = empirical_stieltjes(eigenvalues, z);
    e.theory = solve_m(params, z);
    e.error = std::abs(e.empirical - e.theory);
    out.push_back(e);
  }
  return out;
}

MomentErrors moment_errors(std::span<const double> eigenvalues, const ModelParams& params) {
  if (eigenvalues.empty()) throw UsageError("moment_errors needs at least one eigenvalue");
  double s1 = 0.0;
  double s2 = 0.0;
  for (double lambda : eigenvalues) {
    s1 += lambda;
    s2 += lambda * lambda;
  }
  const double n = static_cast<double>(eigenvalues.size());
  return {std::abs(s1 / n), std::abs(s2 / n - params.nu / params.gamma)};
}

std::pair<double, double> least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("least_squares needs two or more paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw UsageError("least_squares needs distinct abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

namespace {

int dimension_for(double gamma, int n) { return std::max(1, static_cast<int>(std::lround(gamma * n))); }

double complex_std(std::span<const cplx> values, std::span<const std::size_t> pick) {
  const double t = static_cast<double>(pick.size());
  cplx mean = 0.0;
  for (auto i : pick) mean += values[i];
  mean /= t;
  double ss = 0.0;
  for (auto i : pick) ss += std::norm(values[i] - mean);
  return std::sqrt(ss / (t - 1.0));
}

double slope_of(std::span<const int> sizes, std::span<const double> stds) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (!(stds[k] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    lx.push_back(std::log(static_cast<double>(sizes[k])));
    ly.push_back(std::log(stds[k]));
  }
  return least_squares(lx, ly).first;
}

}  // namespace

ConcentrationResult concentration_sweep(const EnsembleConfig& base, cplx z, std::span<const int> sizes, int trials,
                                        int threads, int bootstrap, std::optional<double> gamma_override) {
  if (trials < 20) throw UsageError("concentration_sweep needs at least 20 trials");
  if (sizes.size() < 2) throw UsageError("concentration_sweep needs at least two sizes");
  if (!(z.imag() > 0.0)) throw UsageError("concentration_sweep needs Im z > 0");
  const double gamma = gamma_override.value_or(base.gamma());
  if (!(gamma > 0.0)) throw UsageError("concentration_sweep needs gamma > 0");
  ConcentrationResult out;
  out.z = z;
  out.gamma = gamma;
  out.trials = trials;
  const auto t_count = static_cast<std::size_t>(trials);
  for (int n : sizes) {
    ConcentrationRow row;
    row.n = n;
    row.p = dimension_for(gamma, n);
    row.values.assign(t_count, cplx(0.0, 0.0));
    row.seeds.assign(t_count, 0);
    out.rows.push_back(std::move(row));
  }
  const std::size_t tasks = out.rows.size() * t_count;
  parallel_for(tasks, threads, [&](std::size_t task) {
    auto& row = out.rows[task / t_count];
    const std::size_t t = task % t_count;
    EnsembleConfig cfg = base;
    cfg.n = row.n;
    cfg.p = row.p;
    const SpectrumSample s = simulate(cfg, t, 1);
    row.values[t] = empirical_stieltjes(s, z);
    row.seeds[t] = s.stream_seed;
  });

  std::vector<std::size_t> all(t_count);
  std::iota(all.begin(), all.end(), 0);
  std::vector<double> stds;
  for (auto& row : out.rows) {
    cplx mean = 0.0;
    for (const auto v : row.values) mean += v;
    row.mean_m = mean / static_cast<double>(trials);
    row.std_m = complex_std(row.values, all);
    stds.push_back(row.std_m);
  }
  out.slope = slope_of(sizes, stds);
  out.intercept = std::numeric_limits<double>::quiet_NaN();
  out.ci_lo = out.ci_hi = std::numeric_limits<double>::quiet_NaN();
  if (std::isnan(out.slope)) return out;
  {
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      lx.push_back(std::log(static_cast<double>(sizes[k])));
      ly.push_back(std::log(stds[k]));
    }
    out.intercept = least_squares(lx, ly).second;
  }

  Rng rng(derive_seed(base.seed, 0xB0075712ULL));
  std::vector<double> slopes;
  std::vector<std::size_t> pick(t_count);
  for (int b = 0; b < bootstrap; ++b) {
    std::vector<double> resampled;
    for (const auto& row : out.rows) {
      for (auto& i : pick) i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(t_count)) % t_count;
      resampled.push_back(complex_std(row.values, pick));
    }
    const double s = slope_of(sizes, resampled);
    if (!std::isnan(s)) slopes.push_back(s);
  }
  if (!slopes.empty()) {
    std::sort(slopes.begin(), slopes.end());
    const auto at = [&](double q) {
      const auto idx = static_cast<std::size_t>(q * static_cast<double>(slopes.size() - 1));
      return slopes[idx];
    };
    out.ci_lo = at(0.025);
    out.ci_hi = at(0.975);
  }
  return out;
}

Kernel orthonormal_kernel(int l, int p, VectorModel model) {
  if (l < 1) throw UsageError("orthonormal kernel needs degree l >= 1");
  MomentSequence ms;
  switch (model) {
    case VectorModel::gaussian:
      ms = gaussian_inner_moments(p, 2 * l);
      break;
    case VectorModel::sphere:
      ms = sphere_inner_moments(p, 2 * l);
      break;
    case VectorModel::hypercube:
      ms = unit_gaussian_moments(2 * l);
      break;
  }
  Polynomial poly = orthonormal_from_moments(ms, l);
  std::string name = "orthonormal:l=" + std::to_string(l) + ",p=" + std::to_string(p) + ",model=" + to_string(model);
  return Kernel::custom(std::move(name), [poly = std::move(poly)](double x) { return eval_poly(poly, x); });
}

NormGrowthResult norm_growth_sweep(int l, double gamma, std::span<const int> sizes, int trials, std::uint64_t seed,
                                   VectorModel model, int threads) {
  if (trials < 1) throw UsageError("norm_growth_sweep needs at least one trial");
  if (sizes.empty()) throw UsageError("norm_growth_sweep needs at least one size");
  if (!(gamma > 0.0)) throw UsageError("norm_growth_sweep needs gamma > 0");
  NormGrowthResult out;
  out.l = l;
  out.gamma = gamma;
  out.model = model;
  const auto t_count = static_cast<std::size_t>(trials);
  std::vector<Kernel> kernels;
  std::vector<std::vector<double>> max_eigs(sizes.size(), std::vector<double>(t_count, 0.0));
  for (int n : sizes) {
    NormGrowthRow row;
    row.n = n;
    row.p = dimension_for(gamma, n);
    row.norms.assign(t_count, 0.0);
    row.seeds.assign(t_count, 0);
    kernels.push_back(orthonormal_kernel(l, row.p, model));
    out.rows.push_back(std::move(row));
  }
  parallel_for(out.rows.size() * t_count, threads, [&](std::size_t task) {
    const std::size_t k = task / t_count;
    const std::size_t t = task % t_count;
    auto& row = out.rows[k];
    EnsembleConfig cfg{row.p, row.n, model, kernels[k], seed};
    const SpectrumSample s = simulate(cfg, t, 1);
    row.norms[t] = s.spectral_norm;
    row.seeds[t] = s.stream_seed;
    max_eigs[k][t] = s.eigenvalues.back();
  });
  for (std::size_t k = 0; k < out.rows.size(); ++k) {
    auto& row = out.rows[k];
    row.mean_norm = std::accumulate(row.norms.begin(), row.norms.end(), 0.0) / trials;
    row.max_eigenvalue_mean = std::accumulate(max_eigs[k].begin(), max_eigs[k].end(), 0.0) / trials;
    row.ratio = row.mean_norm / std::pow(static_cast<double>(row.n), 0.25);
  }
  out.ratio_nonincreasing = true;
  out.ratio_nonincreasing_tail = true;
  for (std::size_t k = 1; k < out.rows.size(); ++k) {
    const bool ok = out.rows[k].ratio <= out.rows[k - 1].ratio;
    out.ratio_nonincreasing = out.ratio_nonincreasing && ok;
    if (k >= 2) out.ratio_nonincreasing_tail = out.ratio_nonincreasing_tail && ok;
  }
  out.appears_bounded = out.rows.back().mean_norm < 1.1 * out.rows.front().mean_norm;
  if (l == 1) {
    const double root = std::sqrt(1.0 / gamma);
    out.linear_bound = (1.0 + root) * (1.0 + root) + 1.0;
    for (const auto& row : out.rows)
      for (double s : row.norms) out.linear_bound_ok = out.linear_bound_ok && s < out.linear_bound;
  }
  return out;
}

ComparisonReport compare(const ComparisonConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.ensemble.validate();
  config.params.validate();
  if (config.trials < 1) throw UsageError("compare needs at least one trial");
  ComparisonReport report;
  report.config = config;
  const DensityCurve curve = density_curve(config.params, default_grid(config.params, config.grid_points));
  report.regime = curve.regime;
  report.normalization_error = curve.normalization_error;
  report.atom_window = std::isnan(config.atom_window)
                           ? default_atom_window(curve, config.ensemble.model, config.ensemble.p)
                           : config.atom_window;

  const auto t_count = static_cast<std::size_t>(config.trials);
  std::vector<SpectrumSample> samples(t_count);
  if (t_count == 1) {
    samples[0] = simulate(config.ensemble, 0, config.threads);
  } else {
    parallel_for(t_count, config.threads, [&](std::size_t t) { samples[t] = simulate(config.ensemble, t, 1); });
  }

  report.stieltjes.clear();
  for (std::size_t t = 0; t < t_count; ++t) {
    const SpectrumSample& s = samples[t];
    SeedMetrics m;
    m.trial = t;
    m.seed = s.stream_seed;
    m.cdf_sup_distance = cdf_sup_distance(s, curve, report.atom_window);
    m.cdf_sup_distance_strict = cdf_sup_distance(s, curve, 0.0);
    m.hist_l1 = hist_l1(s, curve, config.bins, report.atom_window);
    m.moments = moment_errors(s.eigenvalues, config.params);
    m.stieltjes = stieltjes_point_check(s.eigenvalues, config.params, config.z_list);
    m.spectral_norm = s.spectral_norm;
    m.replaced_nonfinite = s.replaced_nonfinite;

    report.cdf_sup_distance = std::max(report.cdf_sup_distance, m.cdf_sup_distance);
    report.cdf_sup_distance_strict = std::max(report.cdf_sup_distance_strict, m.cdf_sup_distance_strict);
    report.hist_l1 = std::max(report.hist_l1, m.hist_l1);
    report.moments.mean_abs = std::max(report.moments.mean_abs, m.moments.mean_abs);
    report.moments.second_moment = std::max(report.moments.second_moment, m.moments.second_moment);
    if (report.stieltjes.empty()) {
      report.stieltjes = m.stieltjes;
    } else {
      for (std::size_t k = 0; k < m.stieltjes.size(); ++k)
        if (m.stieltjes[k].error > report.stieltjes[k].error) report.stieltjes[k] = m.stieltjes[k];
    }
    report.per_seed.push_back(std::move(m));
  }

  const auto& tol = config.tolerances;
  bool pass = report.cdf_sup_distance <= tol.cdf;
  if (!std::isnan(tol.hist)) pass = pass && report.hist_l1 <= tol.hist;
  if (!std::isnan(tol.stieltjes))
    for (const auto& e : report.stieltjes) pass = pass && e.error <= tol.stieltjes;
  report.pass = pass;
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace kspec
