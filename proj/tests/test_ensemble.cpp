#include "kspec/ensemble.hpp"
#include "kspec/errors.hpp"
#include "kspec/kernels.hpp"
#include "kspec/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace kspec;

namespace {

// Determinant by cofactor expansion along the first row.
double det_laplace(const std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  double total = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::vector<double>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<double> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(m[r][k]);
      minor.push_back(row);
    }
    total += (c % 2 ? -1.0 : 1.0) * m[0][c] * det_laplace(minor);
  }
  return total;
}

// Roots of det(A - t I) by a fine sign scan plus bisection inside the Gershgorin range.
std::vector<double> char_poly_roots(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  double bound = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) bound = std::max(bound, a.row(i).cwiseAbs().sum());
  auto f = [&](double t) {
    std::vector<std::vector<double>> m(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) m[i][j] = a(i, j) - (i == j ? t : 0.0);
    return det_laplace(m);
  };
  std::vector<double> roots;
  const int steps = 20000;
  double x0 = -bound - 1.0;
  double f0 = f(x0);
  for (int s = 1; s <= steps; ++s) {
    const double x1 = -bound - 1.0 + (2.0 * bound + 2.0) * s / steps;
    const double f1 = f(x1);
    if (f0 == 0.0) roots.push_back(x0);
    else if (f0 * f1 < 0.0) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) { lo = mid; flo = fm; } else { hi = mid; }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
  return roots;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS((EnsembleConfig{0, 10}).validate(), UsageError);
  CHECK_THROWS_AS((EnsembleConfig{10, 1}).validate(), UsageError);
  CHECK((EnsembleConfig{40, 400}).gamma() == doctest::Approx(0.1));
  CHECK(parse_vector_model("sphere") == VectorModel::sphere);
  CHECK_THROWS_AS(parse_vector_model("cube"), UsageError);
}

TEST_CASE("sample_vectors: sphere columns have unit norm") {
  const auto x = sample_vectors({30, 200, VectorModel::sphere, Kernel::sign(), 4});
  for (Eigen::Index i = 0; i < x.cols(); ++i) CHECK(std::abs(x.col(i).norm() - 1.0) <= 1e-12);
}

TEST_CASE("sample_vectors: gaussian squared norms average to one") {
  const auto x = sample_vectors({50, 10000, VectorModel::gaussian, Kernel::sign(), 8});
  const double mean = x.colwise().squaredNorm().mean();
  CHECK(std::abs(mean - 1.0) <= 0.02);
  // Entry variance 1/p.
  CHECK(x.array().square().mean() == doctest::Approx(1.0 / 50).epsilon(0.02));
}

TEST_CASE("sample_vectors: hypercube entries are +-p^{-1/2}") {
  const int p = 70;
  const auto x = sample_vectors({p, 300, VectorModel::hypercube, Kernel::sign(), 9});
  const double s = 1.0 / std::sqrt(static_cast<double>(p));
  int plus = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    CHECK(std::abs(std::abs(x.data()[i]) - s) == 0.0);
    plus += x.data()[i] > 0;
  }
  CHECK(std::abs(plus / static_cast<double>(x.size()) - 0.5) < 0.02);
}

TEST_CASE("sample_vectors is a deterministic function of the seed and trial, not the thread count") {
  const EnsembleConfig cfg{25, 120, VectorModel::gaussian, Kernel::sign(), 42};
  const auto a = sample_vectors(cfg, 3, 1);
  const auto b = sample_vectors(cfg, 3, 4);
  CHECK((a.array() == b.array()).all());
  CHECK(!(a.array() == sample_vectors(cfg, 4, 1).array()).all());
  EnsembleConfig other = cfg;
  other.seed = 43;
  CHECK(!(a.array() == sample_vectors(other, 3, 1).array()).all());
}

TEST_CASE("build_kernel_matrix") {
  const int p = 64;
  const EnsembleConfig cfg{p, 150, VectorModel::gaussian, Kernel::sign(), 1};
  const auto x = sample_vectors(cfg);
  const auto km = build_kernel_matrix(x, Kernel::sign());
  const double s = 1.0 / std::sqrt(static_cast<double>(p));
  for (Eigen::Index i = 0; i < km.a.rows(); ++i) {
    CHECK(km.a(i, i) == 0.0);
    for (Eigen::Index j = 0; j < km.a.cols(); ++j) {
      CHECK(km.a(i, j) == km.a(j, i));
      if (i != j) CHECK((km.a(i, j) == s || km.a(i, j) == -s || km.a(i, j) == 0.0));
    }
  }
  CHECK(km.a.trace() == 0.0);

  const auto lin = build_kernel_matrix(x, Kernel::linear(1.0));
  Eigen::MatrixXd gram = x.transpose() * x;
  Eigen::MatrixXd restored = lin.a;
  restored.diagonal() = x.colwise().squaredNorm().transpose();
  CHECK((restored - gram).cwiseAbs().maxCoeff() <= 1e-12);

  // Threaded construction is bitwise identical.
  const auto km4 = build_kernel_matrix(x, Kernel::sign(), 4);
  CHECK((km4.a.array() == km.a.array()).all());
}

TEST_CASE("build_kernel_matrix repairs non-finite kernel values") {
  // Hypercube vectors with p = 4 give sqrt(p) X_i^T X_j in {-2,-1,0,1,2}; a
  // kernel with a pole at 1 yields inf there, which is replaced and counted.
  const int p = 4;
  const auto x = sample_vectors({p, 60, VectorModel::hypercube, Kernel::sign(), 2});
  const Kernel k = Kernel::custom("pole", [](double v) { return 1.0 / (v - 1.0); }).with_value_at_zero(0.25);
  const auto km = build_kernel_matrix(x, k);
  CHECK(km.replaced_nonfinite > 0);
  CHECK(km.a.allFinite());
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < x.cols(); ++i)
    for (Eigen::Index j = i + 1; j < x.cols(); ++j)
      if (2.0 * x.col(i).dot(x.col(j)) == 1.0) {
        ++hits;
        CHECK(km.a(i, j) == doctest::Approx(0.25 / 2.0));
      }
  CHECK(hits == km.replaced_nonfinite);
}

TEST_CASE("eigenvalues: small exact cases") {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1.5, 1.5, 0;
  const auto e = eigenvalues(a);
  CHECK(e[0] == doctest::Approx(-1.5));
  CHECK(e[1] == doctest::Approx(1.5));

  Eigen::MatrixXd ns(2, 2);
  ns << 0, 1, 2, 0;
  CHECK_THROWS_AS(eigenvalues(ns), UsageError);
}

TEST_CASE("eigenvalues: shift by sigma I") {
  Rng rng(3);
  Eigen::MatrixXd a(40, 40);
  for (Eigen::Index i = 0; i < 40; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.normal();
  const auto e0 = eigenvalues(a);
  const double sigma = 0.75;
  Eigen::MatrixXd shifted = a;
  shifted.diagonal().array() += sigma;
  const auto e1 = eigenvalues(shifted);
  for (std::size_t i = 0; i < e0.size(); ++i) CHECK(std::abs(e1[i] - e0[i] - sigma) <= 1e-12);
  CHECK(std::is_sorted(e0.begin(), e0.end()));
  CHECK(eigenvalues(a) == e0);
}

TEST_CASE("eigenvalues: random 5x5 against characteristic polynomial roots") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd a(5, 5);
    for (Eigen::Index i = 0; i < 5; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.normal();
    const auto e = eigenvalues(a);
    const auto oracle = char_poly_roots(a);
    REQUIRE(oracle.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(e[i] - oracle[i]) <= 1e-8);
  }
}

TEST_CASE("eigen decomposition reconstructs the kernel matrix") {
  const EnsembleConfig cfg{60, 200, VectorModel::gaussian, Kernel::sign(), 5};
  const auto a = build_kernel_matrix(sample_vectors(cfg), cfg.kernel).a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::MatrixXd back = es.eigenvectors() * es.eigenvalues().asDiagonal() * es.eigenvectors().transpose();
  const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
  CHECK((back - a).norm() <= 200 * std::numeric_limits<double>::epsilon() * norm * 10);
}

TEST_CASE("simulate: reproducible, zero trace, spectral norm") {
  const EnsembleConfig cfg{40, 160, VectorModel::gaussian, parse_kernel("power_odd:r=0.25"), 11};
  const auto s1 = simulate(cfg, 2);
  const auto s2 = simulate(cfg, 2, 3);
  CHECK(s1.eigenvalues == s2.eigenvalues);
  CHECK(s1.eigenvalues.size() == 160);
  CHECK(std::is_sorted(s1.eigenvalues.begin(), s1.eigenvalues.end()));
  double trace = 0.0;
  for (double l : s1.eigenvalues) trace += l;
  CHECK(std::abs(trace) <= 1e-10);
  CHECK(s1.spectral_norm == std::max(std::abs(s1.eigenvalues.front()), std::abs(s1.eigenvalues.back())));
  CHECK(s1.stream_seed == trial_seed(cfg, 2));
  CHECK_THROWS_AS(simulate(cfg, 0, 1, 100), ResourceError);
}

TEST_CASE("second-moment law") {
  const EnsembleConfig cfg{400, 800, VectorModel::gaussian, Kernel::sign(), 3};
  const auto x = sample_vectors(cfg);
  const auto a = build_kernel_matrix(x, cfg.kernel).a;
  const auto e = eigenvalues(a);
  const double n = 800;
  double m2 = 0.0;
  for (double l : e) m2 += l * l;
  m2 /= n;
  const double offdiag_mean_sq = a.squaredNorm() / (n * (n - 1));
  CHECK(m2 == doctest::Approx((n - 1) / n * offdiag_mean_sq * n).epsilon(1e-10));
  // Limit nu/gamma = 2; within 5% for p >= 400.
  CHECK(std::abs(m2 - 2.0) <= 0.05 * 2.0);
}

TEST_CASE("sign kernel: gaussian and sphere models give identical matrices") {
  for (std::uint64_t seed : {1ULL, 99ULL}) {
    const EnsembleConfig g{30, 120, VectorModel::gaussian, Kernel::sign(), seed};
    EnsembleConfig s = g;
    s.model = VectorModel::sphere;
    const auto ag = build_kernel_matrix(sample_vectors(g), g.kernel).a;
    const auto as = build_kernel_matrix(sample_vectors(s), s.kernel).a;
    CHECK((ag.array() == as.array()).all());
    CHECK(simulate(g).eigenvalues == simulate(s).eigenvalues);
  }
}

TEST_CASE("empirical_stieltjes") {
  const std::vector<double> zeros(7, 0.0);
  const cplx m = empirical_stieltjes(zeros, cplx(0, 1));
  CHECK(m.real() == doctest::Approx(0.0));
  CHECK(m.imag() == doctest::Approx(1.0));
  const std::vector<double> one{1.0};
  const cplx m1 = empirical_stieltjes(one, cplx(1, 1));
  CHECK(std::abs(m1 - cplx(0, 1)) <= 1e-15);
  Rng rng(8);
  std::vector<double> e(100);
  for (double& v : e) v = 3.0 * rng.normal();
  for (double v : {0.01, 0.5, 3.0}) {
    const cplx mz = empirical_stieltjes(e, cplx(0.2, v));
    CHECK(mz.imag() > 0.0);
    CHECK(std::abs(mz) <= 1.0 / v);
  }
  CHECK_THROWS_AS(empirical_stieltjes(e, cplx(0.0, 0.0)), UsageError);
}

TEST_CASE("esd_histogram") {
  Rng rng(12);
  std::vector<double> e(1000);
  for (double& v : e) v = rng.uniform() * 2.0 - 1.0;
  const auto h = esd_histogram(e, 17, -1.0, 1.0);
  CHECK(h.integral() == doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<double> pm{-1.0, 1.0};
  const auto h2 = esd_histogram(pm, 2, -1.0 - 1e-9, 1.0 + 1e-9);
  CHECK(h2.heights[0] == h2.heights[1]);
  // Partial range: integral is the fraction inside.
  const auto h3 = esd_histogram(e, 10, 0.0, 1.0);
  const double inside = static_cast<double>(std::count_if(e.begin(), e.end(), [](double v) { return v >= 0.0; })) / e.size();
  CHECK(h3.integral() == doctest::Approx(inside).epsilon(1e-12));
  CHECK_THROWS_AS(esd_histogram(e, 0, 0.0, 1.0), UsageError);
  CHECK_THROWS_AS(esd_histogram(e, 3, 1.0, 1.0), UsageError);
}
