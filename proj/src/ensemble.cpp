#include "kspec/ensemble.hpp"

#include "kspec/errors.hpp"
#include "kspec/parallel.hpp"
#include "kspec/rng.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>

namespace kspec {

std::string to_string(VectorModel model) {
  switch (model) {
    case VectorModel::gaussian:
      return "gaussian";
    case VectorModel::sphere:
      return "sphere";
    case VectorModel::hypercube:
      return "hypercube";
  }
  return "unknown";
}

VectorModel parse_vector_model(std::string_view name) {
  if (name == "gaussian") return VectorModel::gaussian;
  if (name == "sphere") return VectorModel::sphere;
  if (name == "hypercube") return VectorModel::hypercube;
  throw UsageError("unknown vector model '" + std::string(name) + "' (expected gaussian, sphere or hypercube)");
}

void EnsembleConfig::validate() const {
  if (p < 1) throw UsageError("ensemble dimension p must be >= 1");
  if (n < 2) throw UsageError("ensemble size n must be >= 2");
}

std::uint64_t trial_seed(const EnsembleConfig& config, std::uint64_t trial) {
  return derive_seed(config.seed, trial);
}

Eigen::MatrixXd sample_vectors(const EnsembleConfig& config, std::uint64_t trial, int threads) {
  config.validate();
  const std::uint64_t stream = trial_seed(config, trial);
  const int p = config.p;
  const double scale = 1.0 / std::sqrt(static_cast<double>(p));
  Eigen::MatrixXd x(p, config.n);
  parallel_for(static_cast<std::size_t>(config.n), threads, [&](std::size_t i) {
    Rng rng(derive_seed(stream, i));
    auto col = x.col(static_cast<Eigen::Index>(i));
    if (config.model == VectorModel::hypercube) {
      std::uint64_t word = 0;
      for (int j = 0; j < p; ++j) {
        if (j % 64 == 0) word = rng.bits();
        col(j) = (word & 1ULL) ? scale : -scale;
        word >>= 1;
      }
      return;
    }
    for (int j = 0; j < p; ++j) col(j) = scale * rng.normal();
    if (config.model == VectorModel::sphere) col /= col.norm();
  });
  return x;
}

KernelMatrix build_kernel_matrix(const Eigen::MatrixXd& x, const Kernel& kernel, int threads) {
  const auto n = x.cols();
  const int p = static_cast<int>(x.rows());
  if (!x.allFinite()) throw UsageError("vector matrix has non-finite entries");
  KernelMatrix out;
  out.a.noalias() = x.transpose() * x;
  const double root = std::sqrt(static_cast<double>(p));
  const double fallback = (kernel.value_at_zero() - kernel.centering_offset()) / root;
  std::vector<std::size_t> repaired(static_cast<std::size_t>(n), 0);
  auto& a = out.a;
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t ui) {
    const auto i = static_cast<Eigen::Index>(ui);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = kernel(root * a(i, j)) / root;
      if (!std::isfinite(v)) {
        v = fallback;
        ++repaired[ui];
      }
      a(i, j) = v;
    }
  });
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) a(j, i) = a(i, j);
  }
  for (auto r : repaired) out.replaced_nonfinite += r;
  return out;
}

std::vector<double> eigenvalues(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw UsageError("eigenvalues needs a square matrix");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw UsageError("eigenvalues needs a symmetric matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric eigensolver did not converge for the " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " kernel matrix (QR iteration cap 30 n)");
  std::vector<double> out(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void check_resources(const EnsembleConfig& config, int max_n) {
  if (config.n > max_n)
    throw ResourceError("n = " + std::to_string(config.n) + " exceeds the dense-matrix ceiling " +
                        std::to_string(max_n));
  const double needed = 8.0 * (static_cast<double>(config.n) * config.n * 2.0 +
                               static_cast<double>(config.p) * config.n);
  const long pages = sysconf(_SC_AVPHYS_PAGES);
  const long page_size = sysconf(_SC_PAGE_SIZE);
  if (pages > 0 && page_size > 0 && needed > static_cast<double>(pages) * static_cast<double>(page_size))
    throw ResourceError("n = " + std::to_string(config.n) + " needs about " +
                        std::to_string(static_cast<long long>(needed / (1 << 20))) +
                        " MiB, more than the available memory");
}

}  // namespace

SpectrumSample simulate(const EnsembleConfig& config, std::uint64_t trial, int threads, int max_n) {
  config.validate();
  check_resources(config, max_n);
  SpectrumSample s;
  s.config = config;
  s.trial = trial;
  s.stream_seed = trial_seed(config, trial);
  KernelMatrix km = build_kernel_matrix(sample_vectors(config, trial, threads), config.kernel, threads);
  s.replaced_nonfinite = km.replaced_nonfinite;
  s.eigenvalues = eigenvalues(km.a);
  s.spectral_norm = std::max(std::abs(s.eigenvalues.front()), std::abs(s.eigenvalues.back()));
  return s;
}

cplx empirical_stieltjes(std::span<const double> eigenvalues, cplx z) {
  if (!(z.imag() > 0.0)) throw UsageError("empirical_stieltjes requires Im z > 0");
  if (eigenvalues.empty()) throw UsageError("empirical_stieltjes needs at least one eigenvalue");
  cplx acc = 0.0;
  for (double lambda : eigenvalues) acc += 1.0 / (lambda - z);
  return acc / static_cast<double>(eigenvalues.size());
}

double Histogram::integral() const {
  double total = 0.0;
  for (double h : heights) total += h;
  return total * width();
}

Histogram esd_histogram(std::span<const double> eigenvalues, int bins, double lo, double hi) {
  if (bins < 1) throw UsageError("histogram needs at least one bin");
  if (!(lo < hi)) throw UsageError("histogram range must satisfy lo < hi");
  if (eigenvalues.empty()) throw UsageError("histogram needs at least one eigenvalue");
  Histogram h{lo, hi, std::vector<double>(static_cast<std::size_t>(bins), 0.0)};
  const double w = h.width();
  for (double lambda : eigenvalues) {
    if (lambda < lo || lambda > hi) continue;
    auto idx = static_cast<std::size_t>((lambda - lo) / w);
    if (idx >= h.heights.size()) idx = h.heights.size() - 1;
    h.heights[idx] += 1.0;
  }
  const double norm = 1.0 / (static_cast<double>(eigenvalues.size()) * w);
  for (double& v : h.heights) v *= norm;
  return h;
}

}  // namespace kspec
