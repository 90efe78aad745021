#include "kspec/kernels.hpp"

#include "kspec/errors.hpp"
#include "kspec/expansion.hpp"
#include "kspec/poly_basis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace kspec {

namespace {

void check_exponent(double r) {
  if (!(r > 0.0 && r < 0.5)) throw UsageError("power kernels need 0 < r < 1/2 for square integrability");
}

// sum_l coeffs[l] h_l(x) via the normalized three-term recurrence.
double hermite_series(const std::vector<double>& coeffs, double x) {
  if (coeffs.empty()) return 0.0;
  double prev = 1.0, cur = x;
  double acc = coeffs[0];
  if (coeffs.size() > 1) acc += coeffs[1] * x;
  for (std::size_t l = 1; l + 1 < coeffs.size(); ++l) {
    const double next = (x * cur - std::sqrt(static_cast<double>(l)) * prev) / std::sqrt(static_cast<double>(l + 1));
    prev = cur;
    cur = next;
    acc += coeffs[l + 1] * cur;
  }
  return acc;
}

double hermite_value(int l, double x) {
  double prev = 1.0, cur = x;
  if (l == 0) return prev;
  for (int j = 1; j < l; ++j) {
    const double next = (x * cur - std::sqrt(static_cast<double>(j)) * prev) / std::sqrt(static_cast<double>(j + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Kernel Kernel::sign() {
  Kernel k;
  k.kind_ = KernelKind::sign;
  return k;
}

Kernel Kernel::power_even(double r) {
  check_exponent(r);
  Kernel k;
  k.kind_ = KernelKind::power_even;
  k.r_ = r;
  return k;
}

Kernel Kernel::power_odd(double r) {
  check_exponent(r);
  Kernel k;
  k.kind_ = KernelKind::power_odd;
  k.r_ = r;
  return k;
}

Kernel Kernel::linear(double c) {
  Kernel k;
  k.kind_ = KernelKind::linear;
  k.c_ = c;
  return k;
}

Kernel Kernel::hermite_unit(int l) {
  if (l < 1 || l > kMaxDegree) throw UsageError("hermite kernel degree must lie in [1, 64]");
  Kernel k;
  k.kind_ = KernelKind::hermite_unit;
  k.l_ = l;
  return k;
}

Kernel Kernel::series(std::vector<double> coeffs) {
  if (coeffs.empty()) throw UsageError("series kernel needs at least one coefficient");
  if (static_cast<int>(coeffs.size()) > kMaxDegree + 1) throw UsageError("series kernel degree exceeds 64");
  Kernel k;
  k.kind_ = KernelKind::series;
  k.series_ = std::move(coeffs);
  return k;
}

Kernel Kernel::custom(std::string name, std::function<double(double)> eval, std::vector<Singularity> singular) {
  if (!eval) throw UsageError("custom kernel needs an evaluator");
  for (const auto& s : singular)
    if (s.exponent < 0.0 || s.exponent >= 1.0) throw UsageError("singular exponent must lie in [0, 1)");
  Kernel k;
  k.kind_ = KernelKind::custom;
  k.name_ = std::move(name);
  k.eval_ = std::make_shared<const std::function<double(double)>>(std::move(eval));
  k.singular_ = std::move(singular);
  return k;
}

Kernel Kernel::with_value_at_zero(double v) const {
  Kernel k = *this;
  k.value_at_zero_ = v;
  return k;
}

Kernel Kernel::with_centering_offset(double offset) const {
  Kernel k = *this;
  k.offset_ = offset;
  return k;
}

double Kernel::raw(double x) const {
  switch (kind_) {
    case KernelKind::sign:
      if (x == 0.0) return value_at_zero_;
      return x > 0.0 ? 1.0 : -1.0;
    case KernelKind::power_even:
      if (x == 0.0) return value_at_zero_;
      return std::pow(std::abs(x), -r_);
    case KernelKind::power_odd:
      if (x == 0.0) return value_at_zero_;
      return (x > 0.0 ? 1.0 : -1.0) * std::pow(std::abs(x), -r_);
    case KernelKind::linear:
      return c_ * x;
    case KernelKind::hermite_unit:
      return hermite_value(l_, x);
    case KernelKind::series:
      return hermite_series(series_, x);
    case KernelKind::custom:
      for (const auto& s : singular_)
        if (x == s.at) return value_at_zero_;
      return (*eval_)(x);
  }
  return 0.0;
}

std::vector<Singularity> Kernel::singularities() const {
  switch (kind_) {
    case KernelKind::sign:
      return {{0.0, 0.0}};
    case KernelKind::power_even:
    case KernelKind::power_odd:
      return {{0.0, r_}};
    case KernelKind::custom:
      return singular_;
    default:
      return {};
  }
}

bool Kernel::is_polynomial() const {
  return kind_ == KernelKind::linear || kind_ == KernelKind::hermite_unit || kind_ == KernelKind::series;
}

std::string Kernel::spec() const {
  switch (kind_) {
    case KernelKind::sign:
      return "sign";
    case KernelKind::power_even:
      return "power_even:r=" + format_number(r_);
    case KernelKind::power_odd:
      return "power_odd:r=" + format_number(r_);
    case KernelKind::linear:
      return "linear:c=" + format_number(c_);
    case KernelKind::hermite_unit:
      return "hermite:l=" + std::to_string(l_);
    case KernelKind::series: {
      std::string out = "series:";
      bool first = true;
      for (std::size_t l = 0; l < series_.size(); ++l) {
        if (series_[l] == 0.0) continue;
        if (!first) out += ",";
        out += "c" + std::to_string(l) + "=" + format_number(series_[l]);
        first = false;
      }
      if (first) out += "c1=0";
      return out;
    }
    case KernelKind::custom:
      return name_;
  }
  return {};
}

double kernel_eval(const Kernel& k, double x) { return k(x); }

double rescaled_f(const Kernel& k, int p, double xi) {
  if (p < 1) throw UsageError("rescaled_f requires p >= 1");
  const double root = std::sqrt(static_cast<double>(p));
  return k(root * xi) / root;
}

double abs_gaussian_moment(double s) {
  if (!(s > -1.0)) throw UsageError("E|zeta|^s requires s > -1");
  return std::pow(2.0, 0.5 * s) * std::tgamma(0.5 * (s + 1.0)) / std::sqrt(std::numbers::pi);
}

namespace {

std::vector<Singularity> doubled(const std::vector<Singularity>& sing) {
  std::vector<Singularity> out = sing;
  for (auto& s : out) {
    s.exponent *= 2.0;
    if (s.exponent >= 1.0) throw NumericalError("kernel is not square integrable at x = " + std::to_string(s.at));
  }
  return out;
}

}  // namespace

double gaussian_mean(const Kernel& k) {
  switch (k.kind()) {
    case KernelKind::sign:
    case KernelKind::power_odd:
    case KernelKind::linear:
    case KernelKind::hermite_unit:
      return 0.0;
    case KernelKind::power_even:
      return abs_gaussian_moment(-k.r());
    case KernelKind::series:
      return k.series_coeffs()[0];
    case KernelKind::custom: {
      const auto sing = k.singularities();
      return gaussian_expectation([&](double x) { return k.raw(x); }, sing).value;
    }
  }
  return 0.0;
}

Kernel center(const Kernel& k) { return k.with_centering_offset(gaussian_mean(k)); }

LimitConstants limit_constants(const Kernel& k) {
  switch (k.kind()) {
    case KernelKind::sign:
      return {std::sqrt(2.0 / std::numbers::pi), 1.0, Provenance::closed_form};
    case KernelKind::power_odd:
      return {abs_gaussian_moment(1.0 - k.r()), abs_gaussian_moment(-2.0 * k.r()), Provenance::closed_form};
    case KernelKind::power_even: {
      const double m1 = abs_gaussian_moment(-k.r());
      return {0.0, abs_gaussian_moment(-2.0 * k.r()) - m1 * m1, Provenance::closed_form};
    }
    case KernelKind::linear:
      return {k.c(), k.c() * k.c(), Provenance::closed_form};
    case KernelKind::hermite_unit:
      return {k.l() == 1 ? 1.0 : 0.0, 1.0, Provenance::closed_form};
    case KernelKind::series: {
      const auto& c = k.series_coeffs();
      double nu = 0.0;
      for (std::size_t l = 1; l < c.size(); ++l) nu += c[l] * c[l];
      return {c.size() > 1 ? c[1] : 0.0, nu, Provenance::closed_form};
    }
    case KernelKind::custom: {
      const auto sing = k.singularities();
      const double a = gaussian_expectation([&](double x) { return x * k.raw(x); }, sing).value;
      const double mean = gaussian_expectation([&](double x) { return k.raw(x); }, sing).value;
      const auto sq = doubled(sing);
      const double second = gaussian_expectation(
                                [&](double x) {
                                  const double v = k.raw(x);
                                  return v * v;
                                },
                                sq)
                                .value;
      return {a, std::max(0.0, second - mean * mean), Provenance::quadrature};
    }
  }
  return {};
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw UsageError("kernel parameter '" + key + "' is not a number: '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v))
    throw UsageError("kernel parameter '" + key + "' is not a number: '" + text + "'");
  return v;
}

}  // namespace

Kernel parse_kernel(std::string_view spec_text) {
  const std::string text = trim(lower(spec_text));
  const auto colon = text.find(':');
  const std::string name = trim(text.substr(0, colon));
  std::map<std::string, double> params;
  if (colon != std::string::npos) {
    std::stringstream rest(text.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw UsageError("kernel parameter '" + item + "' must be key=value");
      const std::string key = trim(item.substr(0, eq));
      if (params.count(key)) throw UsageError("duplicate kernel parameter '" + key + "'");
      params[key] = parse_double(key, trim(item.substr(eq + 1)));
    }
  }
  auto require_only = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : params) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) throw UsageError("unknown parameter '" + key + "' for kernel '" + name + "'");
    }
  };
  auto get = [&](const char* key) {
    auto it = params.find(key);
    if (it == params.end()) throw UsageError("kernel '" + name + "' needs parameter '" + key + "'");
    return it->second;
  };

  if (name == "sign") {
    require_only({});
    return center(Kernel::sign());
  }
  if (name == "power_even" || name == "power_odd") {
    require_only({"r"});
    const double r = get("r");
    return center(name == "power_even" ? Kernel::power_even(r) : Kernel::power_odd(r));
  }
  if (name == "linear") {
    require_only({"c"});
    return center(Kernel::linear(params.count("c") ? params["c"] : 1.0));
  }
  if (name == "hermite") {
    require_only({"l"});
    const double l = get("l");
    if (l != std::floor(l)) throw UsageError("hermite degree must be an integer");
    return center(Kernel::hermite_unit(static_cast<int>(l)));
  }
  if (name == "series") {
    std::vector<double> coeffs;
    for (const auto& [key, value] : params) {
      if (key.size() < 2 || key[0] != 'c' ||
          !std::all_of(key.begin() + 1, key.end(), [](unsigned char ch) { return std::isdigit(ch); }))
        throw UsageError("unknown parameter '" + key + "' for kernel 'series'");
      const int l = std::stoi(key.substr(1));
      if (l > kMaxDegree) throw UsageError("series degree exceeds 64");
      if (static_cast<int>(coeffs.size()) <= l) coeffs.resize(l + 1, 0.0);
      coeffs[l] = value;
    }
    if (coeffs.empty()) throw UsageError("series kernel needs at least one coefficient");
    return center(Kernel::series(std::move(coeffs)));
  }
  throw UsageError("unknown kernel '" + name + "'");
}

ConditionReport check_conditions(const Kernel& k, std::span<const int> p_list, int max_degree) {
  if (p_list.empty()) throw UsageError("check_conditions needs at least one dimension");
  ConditionReport report;
  report.limit = limit_constants(k);
  report.max_degree = max_degree;
  const auto sing = k.singularities();
  const auto sq = doubled(sing);
  for (int p : p_list) {
    ConditionEntry e;
    e.p = p;
    const MomentSequence ms = gaussian_inner_moments(p, 2 * max_degree);
    e.coeffs = inner_expansion_coefficients(k, ms, max_degree);
    e.mean = e.coeffs[0];
    const double second = model_expectation(
                              MomentModel::gaussian_inner, p,
                              [&](double x) {
                                const double v = k(x);
                                return v * v;
                              },
                              sq)
                              .value;
    e.nu_p = second - e.mean * e.mean;
    e.a1_p = max_degree >= 1 ? e.coeffs[1] : 0.0;
    for (int l = 1; l <= max_degree; ++l) e.partial_sum += e.coeffs[l] * e.coeffs[l];
    e.tail_mass = e.nu_p - e.partial_sum;
    report.max_tail_mass = std::max(report.max_tail_mass, e.tail_mass);
    report.entries.push_back(std::move(e));
  }
  constexpr double kSlack = 1e-9;
  for (std::size_t i = 1; i < report.entries.size(); ++i) {
    const auto& prev = report.entries[i - 1];
    const auto& cur = report.entries[i];
    if (std::abs(cur.nu_p - report.limit.nu) > std::abs(prev.nu_p - report.limit.nu) + kSlack)
      report.nu_trend_ok = false;
    if (std::abs(cur.a1_p - report.limit.a) > std::abs(prev.a1_p - report.limit.a) + kSlack)
      report.a1_trend_ok = false;
  }
  if (!report.nu_trend_ok) report.flags.push_back("nu_p does not move toward nu along the dimension list");
  if (!report.a1_trend_ok) report.flags.push_back("a_{1,p} does not move toward a along the dimension list");
  for (const auto& e : report.entries)
    if (std::abs(e.mean) > 1e-6)
      report.flags.push_back("kernel mean under the p=" + std::to_string(e.p) + " law is " + std::to_string(e.mean));
  if (report.max_tail_mass > 1e-2)
    report.flags.push_back("tail mass beyond degree " + std::to_string(max_degree) + " reaches " +
                           std::to_string(report.max_tail_mass));
  return report;
}

}  // namespace kspec
