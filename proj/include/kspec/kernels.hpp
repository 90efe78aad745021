#pragma once

#include "kspec/quadrature.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kspec {

enum class KernelKind { sign, power_even, power_odd, linear, hermite_unit, series, custom };

/// A scalar kernel k(x) together with its centering offset and the value it
/// takes at its singular point. Immutable; the `with_*` members return copies.
class Kernel {
 public:
  static Kernel sign();
  /// |x|^{-r}, 0 < r < 1/2. Uncentered; see center().
  static Kernel power_even(double r);
  /// sign(x) |x|^{-r}, 0 < r < 1/2.
  static Kernel power_odd(double r);
  static Kernel linear(double c);
  /// Normalized Hermite polynomial h_l, l >= 1.
  static Kernel hermite_unit(int l);
  /// sum_l coeffs[l] h_l(x); coeffs[0] is the constant term.
  static Kernel series(std::vector<double> coeffs);
  /// Arbitrary evaluator. `singular` lists points where k may jump or blow up;
  /// quadrature splits there and the matrix builder treats non-finite values
  /// through value_at_zero.
  static Kernel custom(std::string name, std::function<double(double)> eval,
                       std::vector<Singularity> singular = {});

  KernelKind kind() const { return kind_; }
  double r() const { return r_; }
  double c() const { return c_; }
  int l() const { return l_; }
  const std::vector<double>& series_coeffs() const { return series_; }
  double centering_offset() const { return offset_; }
  double value_at_zero() const { return value_at_zero_; }

  Kernel with_value_at_zero(double v) const;
  Kernel with_centering_offset(double offset) const;

  /// Kernel value before the centering offset is removed.
  double raw(double x) const;
  /// k(x) - offset; at the singular point returns value_at_zero - offset.
  double operator()(double x) const { return raw(x) - offset_; }

  /// Singular points of k itself (exponent = blow-up order of |k|).
  std::vector<Singularity> singularities() const;
  /// True when k is a polynomial (Gauss-Hermite rules integrate it exactly).
  bool is_polynomial() const;
  /// Grammar string that parses back to this kernel (custom kernels: their name).
  std::string spec() const;

 private:
  Kernel() = default;

  KernelKind kind_ = KernelKind::sign;
  double r_ = 0.0;
  double c_ = 0.0;
  int l_ = 0;
  std::vector<double> series_;
  std::string name_;
  std::shared_ptr<const std::function<double(double)>> eval_;
  std::vector<Singularity> singular_;
  double offset_ = 0.0;
  double value_at_zero_ = 0.0;
};

/// k(x) minus its centering offset.
double kernel_eval(const Kernel& k, double x);

/// f(xi; p) = p^{-1/2} k(sqrt(p) xi).
double rescaled_f(const Kernel& k, int p, double xi);

/// E|zeta|^s for zeta ~ N(0,1), s > -1.
double abs_gaussian_moment(double s);

enum class Provenance { closed_form, quadrature };

/// Limit of the linear coefficient (a) and of the variance (nu).
struct LimitConstants {
  double a = 0.0;
  double nu = 0.0;
  Provenance provenance = Provenance::closed_form;
};

LimitConstants limit_constants(const Kernel& k);

/// E k_raw(zeta), closed form where available.
double gaussian_mean(const Kernel& k);

/// Copy of k with centering_offset = E k_raw(zeta).
Kernel center(const Kernel& k);

/// Parse the kernel mini-grammar (`sign`, `power_even:r=0.25`, `power_odd:r=0.25`,
/// `linear:c=1.0`, `hermite:l=2`, `series:c1=...,c2=...`). The result is centered.
Kernel parse_kernel(std::string_view spec);

struct ConditionEntry {
  int p = 0;
  double mean = 0.0;          // a_{0,p}
  double nu_p = 0.0;          // Var k(xi_p)
  double a1_p = 0.0;          // a_{1,p}
  double partial_sum = 0.0;   // sum_{1<=l<=L} a_{l,p}^2
  double tail_mass = 0.0;     // nu_p - partial_sum
  std::vector<double> coeffs; // a_{0,p}..a_{L,p}
};

struct ConditionReport {
  LimitConstants limit;
  int max_degree = 0;
  std::vector<ConditionEntry> entries;
  double max_tail_mass = 0.0;
  bool nu_trend_ok = true;  // |nu_p - nu| non-increasing along p_list
  bool a1_trend_ok = true;  // |a_{1,p} - a| non-increasing along p_list
  std::vector<std::string> flags;
};

/// Finite-p diagnostics of the variance, uniform-expansion and linear
/// coefficient conditions, under the Gaussian inner-product law.
ConditionReport check_conditions(const Kernel& k, std::span<const int> p_list, int max_degree);

}  // namespace kspec
