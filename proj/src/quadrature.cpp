#include "kspec/quadrature.hpp"

#include "kspec/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

namespace kspec {

double QuadratureRule::apply(const std::function<double(double)>& f) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
  return acc;
}

namespace {

// Golub-Welsch for starting values, then each node is polished by Newton on the
// orthonormal polynomial p_n and its weight recomputed as mass / sum_k p_k(x)^2.
// Eigenvector components alone lose relative accuracy in the tails for large n.
QuadratureRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mass) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, offdiag, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("Golub-Welsch eigensolve failed");
  QuadratureRule rule;
  const auto n = diag.size();
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // p_n(x), p_n'(x) and sum_{k<n} p_k(x)^2 by the three-term recurrence.
  auto recur = [&](double x, double& pn, double& dpn, double& christoffel) {
    double p_prev = 0.0;
    double p = 1.0;
    double d_prev = 0.0;
    double d = 0.0;
    christoffel = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      christoffel += p * p;
      const double b_prev = k > 0 ? offdiag(k - 1) : 0.0;
      const double b = k + 1 < n ? offdiag(k) : 1.0;
      const double p_next = ((x - diag(k)) * p - b_prev * p_prev) / b;
      const double d_next = ((x - diag(k)) * d + p - b_prev * d_prev) / b;
      p_prev = p;
      p = p_next;
      d_prev = d;
      d = d_next;
    }
    pn = p;
    dpn = d;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = solver.eigenvalues()(i);
    double pn = 0.0;
    double dpn = 0.0;
    double christoffel = 0.0;
    for (int it = 0; it < 4; ++it) {
      recur(x, pn, dpn, christoffel);
      if (dpn == 0.0 || !std::isfinite(pn / dpn)) break;
      const double step = pn / dpn;
      x -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    recur(x, pn, dpn, christoffel);
    rule.nodes[i] = x;
    rule.weights[i] = mass / christoffel;
  }
  return rule;
}

}  // namespace

QuadratureRule gauss_hermite_rule(int n) {
  if (n < 1) throw UsageError("quadrature rule needs at least one node");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  QuadratureRule rule = golub_welsch(diag, off, 1.0);
  // Symmetrize: the rule is exactly symmetric in exact arithmetic.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

QuadratureRule gauss_legendre_rule(int n) {
  if (n < 1) throw UsageError("quadrature rule needs at least one node");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(diag, off, 2.0);
}

QuadratureRule gauss_laguerre_rule(int n, double alpha) {
  if (n < 1) throw UsageError("quadrature rule needs at least one node");
  if (!(alpha > -1.0)) throw UsageError("Gauss-Laguerre requires alpha > -1");
  Eigen::VectorXd diag(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k) diag(k) = 2.0 * k + alpha + 1.0;
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(k * (k + alpha));
  return golub_welsch(diag, off, 1.0);
}

namespace {

constexpr int kPanelOrder = 16;

const QuadratureRule& panel_rule() {
  static const QuadratureRule rule = gauss_legendre_rule(kPanelOrder);
  return rule;
}

// Integral over [0,1] of g(t) with `panels` equal composite panels.
double composite(const std::function<double(double)>& g, int panels) {
  const QuadratureRule& rule = panel_rule();
  const double h = 1.0 / panels;
  double acc = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double mid = (k + 0.5) * h;
    double part = 0.0;
    for (int i = 0; i < kPanelOrder; ++i) part += rule.weights[i] * g(mid + 0.5 * h * rule.nodes[i]);
    acc += 0.5 * h * part;
  }
  return acc;
}

// One piece [u, v] with at most one singular end (u if from_left).
IntegrationResult integrate_piece(const std::function<double(double)>& f, double u, double v, double exponent,
                                  bool from_left, const IntegrationOptions& opt) {
  const double len = v - u;
  const double beta = 1.0 / (1.0 - exponent);
  std::function<double(double)> g;
  if (exponent > 0.0) {
    g = [&](double t) {
      const double s = std::pow(t, beta);
      const double jac = len * beta * std::pow(t, beta - 1.0);
      const double x = from_left ? u + len * s : v - len * s;
      return f(x) * jac;
    };
  } else {
    g = [&](double t) { return len * f(u + len * t); };
  }
  int panels = 2;
  double prev = composite(g, panels);
  double err = INFINITY;
  while (panels < opt.max_panels) {
    panels *= 2;
    const double cur = composite(g, panels);
    err = std::abs(cur - prev);
    prev = cur;
    if (err <= opt.tol * std::max(1.0, std::abs(cur))) return {cur, err};
  }
  if (err <= opt.fail_tol * std::max(1.0, std::abs(prev))) return {prev, err};
  throw QuadratureError("quadrature did not converge on [" + std::to_string(u) + ", " + std::to_string(v) +
                            "]: successive refinements differ by " + std::to_string(err),
                        err);
}

}  // namespace

IntegrationResult integrate(const std::function<double(double)>& f, double lo, double hi,
                            std::span<const Singularity> singularities, const IntegrationOptions& options) {
  if (!(lo < hi)) throw UsageError("integration interval must satisfy lo < hi");
  // Breakpoints with their singular exponents (0 for plain breakpoints).
  std::map<double, double> points{{lo, 0.0}, {hi, 0.0}};
  for (const auto& s : singularities) {
    if (s.exponent < 0.0 || s.exponent >= 1.0)
      throw UsageError("singularity exponent must lie in [0, 1)");
    if (s.at < lo || s.at > hi) continue;
    auto [it, inserted] = points.emplace(s.at, s.exponent);
    if (!inserted) it->second = std::max(it->second, s.exponent);
    for (double off : {-1.0, 1.0}) {
      const double q = s.at + off;
      if (q > lo && q < hi) points.emplace(q, 0.0);
    }
  }
  IntegrationResult total;
  for (auto it = points.begin(); std::next(it) != points.end(); ++it) {
    const auto nxt = std::next(it);
    const double u = it->first, v = nxt->first;
    const double eu = it->second, ev = nxt->second;
    IntegrationResult part;
    if (eu > 0.0 && ev > 0.0) {
      const double mid = 0.5 * (u + v);
      const auto a = integrate_piece(f, u, mid, eu, true, options);
      const auto b = integrate_piece(f, mid, v, ev, false, options);
      part = {a.value + b.value, a.error + b.error};
    } else if (ev > 0.0) {
      part = integrate_piece(f, u, v, ev, false, options);
    } else {
      part = integrate_piece(f, u, v, eu, true, options);
    }
    total.value += part.value;
    total.error += part.error;
  }
  return total;
}

IntegrationResult gaussian_expectation(const std::function<double(double)>& f,
                                       std::span<const Singularity> singularities,
                                       const IntegrationOptions& options) {
  constexpr double kCut = 40.0;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto weighted = [&](double x) { return f(x) * norm * std::exp(-0.5 * x * x); };
  std::vector<Singularity> sing(singularities.begin(), singularities.end());
  // Split the tails so panels concentrate where the weight lives.
  sing.push_back({-8.0, 0.0});
  sing.push_back({8.0, 0.0});
  return integrate(weighted, -kCut, kCut, sing, options);
}

}  // namespace kspec
