#pragma once

#include "kspec/cubic.hpp"
#include "kspec/kernels.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kspec {

enum class VectorModel { gaussian, sphere, hypercube };

std::string to_string(VectorModel model);
VectorModel parse_vector_model(std::string_view name);

inline constexpr int kDefaultMaxN = 8192;

struct EnsembleConfig {
  int p = 0;
  int n = 0;
  VectorModel model = VectorModel::gaussian;
  Kernel kernel = Kernel::sign();
  std::uint64_t seed = 0;

  double gamma() const { return static_cast<double>(p) / n; }
  /// Throws UsageError unless p >= 1 and n >= 2.
  void validate() const;
};

/// Seed of the stream used for trial `trial` of a configuration.
std::uint64_t trial_seed(const EnsembleConfig& config, std::uint64_t trial);

/// p x n matrix whose columns are i.i.d. draws of the vector model. Column i
/// uses its own child stream of the trial seed; the sphere model normalizes the
/// Gaussian draw of the same stream, and the hypercube model takes signs.
Eigen::MatrixXd sample_vectors(const EnsembleConfig& config, std::uint64_t trial = 0, int threads = 1);

struct KernelMatrix {
  Eigen::MatrixXd a;
  std::size_t replaced_nonfinite = 0;  // entries repaired through value_at_zero
};

/// A_ij = f(X_i^T X_j; p) off the diagonal, 0 on it; each unordered pair is
/// evaluated once.
KernelMatrix build_kernel_matrix(const Eigen::MatrixXd& x, const Kernel& kernel, int threads = 1);

/// Full spectrum of a symmetric matrix, ascending. Throws UsageError when the
/// matrix is not symmetric to 1e-12 and NumericalError on non-convergence.
std::vector<double> eigenvalues(const Eigen::MatrixXd& a);

struct SpectrumSample {
  std::vector<double> eigenvalues;  // ascending
  EnsembleConfig config;
  std::uint64_t trial = 0;
  std::uint64_t stream_seed = 0;
  double spectral_norm = 0.0;
  std::size_t replaced_nonfinite = 0;
};

/// One reproducible draw: vectors, kernel matrix, spectrum. Throws
/// ResourceError when n exceeds max_n or the dense matrix does not fit in memory.
SpectrumSample simulate(const EnsembleConfig& config, std::uint64_t trial = 0, int threads = 1,
                        int max_n = kDefaultMaxN);

/// m_A(z) = (1/n) sum_i 1/(lambda_i - z).
cplx empirical_stieltjes(std::span<const double> eigenvalues, cplx z);
inline cplx empirical_stieltjes(const SpectrumSample& s, cplx z) { return empirical_stieltjes(s.eigenvalues, z); }

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> heights;  // density units: count / (n * width)

  double width() const { return (hi - lo) / static_cast<double>(heights.size()); }
  double integral() const;
};

/// Equal-width histogram normalized by the total sample size.
Histogram esd_histogram(std::span<const double> eigenvalues, int bins, double lo, double hi);

}  // namespace kspec
