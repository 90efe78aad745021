#pragma once

#include "kspec/ensemble.hpp"
#include "kspec/kernels.hpp"
#include "kspec/limit_law.hpp"
#include "kspec/verify.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace kspec {

inline constexpr const char* kToolName = "kernel-spectra";
inline constexpr const char* kToolVersion = "0.1.0";

/// Resolved run configuration echoed into every output, as ordered key=value pairs.
using ConfigLines = std::vector<std::pair<std::string, std::string>>;

/// `# kernel-spectra 0.1.0` followed by one `# config: key=value` line per entry.
void write_config_comments(std::ostream& out, const ConfigLines& config);
/// Recover the `config:` lines of any file written by this tool.
ConfigLines read_config_comments(std::istream& in);
nlohmann::json config_json(const ConfigLines& config);

/// Shortest round-trip decimal form.
std::string format_double(double v);

// Density curve: header `t,rho`, one row per grid point, trailing `# atom,<location>,<mass>` lines.
void write_density_csv(std::ostream& out, const DensityCurve& curve, const ConfigLines& config = {});
nlohmann::json density_json(const DensityCurve& curve, const ConfigLines& config = {});
/// Reads grid, values and atoms back (params are left at defaults).
DensityCurve read_density_csv(std::istream& in);

// Spectrum: comment lines `# p,n,model,kernel,seed` and its values, then header `lambda`.
void write_spectrum_csv(std::ostream& out, const SpectrumSample& sample, const ConfigLines& config = {});
nlohmann::json spectrum_json(const SpectrumSample& sample, const ConfigLines& config = {});
std::vector<double> read_spectrum_csv(std::istream& in);

struct CoefficientTable {
  std::string kernel;
  std::vector<double> coeffs;      // c_0..c_L, Hermite basis under the Gaussian weight
  std::optional<int> p;            // set when the finite-p column is present
  std::vector<double> finite_p;    // a_{0,p}..a_{L,p} against the inner-product law
  LimitConstants limit;
};
void write_coefficients_csv(std::ostream& out, const CoefficientTable& table, const ConfigLines& config = {});
nlohmann::json coefficients_json(const CoefficientTable& table, const ConfigLines& config = {});

nlohmann::json report_json(const ComparisonReport& report, const ConfigLines& config = {});
nlohmann::json concentration_json(const ConcentrationResult& result, const ConfigLines& config = {});
nlohmann::json norm_growth_json(const NormGrowthResult& result, const ConfigLines& config = {});
void write_concentration_csv(std::ostream& out, const ConcentrationResult& result, const ConfigLines& config = {});
void write_norm_growth_csv(std::ostream& out, const NormGrowthResult& result, const ConfigLines& config = {});

}  // namespace kspec
