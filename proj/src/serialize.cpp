#include "kspec/serialize.hpp"

#include "kspec/errors.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace kspec {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_config_comments(std::ostream& out, const ConfigLines& config) {
  out << "# " << kToolName << ' ' << kToolVersion << '\n';
  for (const auto& [key, value] : config) out << "# config: " << key << '=' << value << '\n';
}

ConfigLines read_config_comments(std::istream& in) {
  static const std::string prefix = "# config: ";
  ConfigLines out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) != 0) continue;
    const std::string body = line.substr(prefix.size());
    const auto eq = body.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
  }
  return out;
}

json config_json(const ConfigLines& config) {
  json j = json::object();
  for (const auto& [key, value] : config) j[key] = value;
  return j;
}

namespace {

json header_json(const ConfigLines& config) {
  return {{"tool", kToolName}, {"version", kToolVersion}, {"config", config_json(config)}};
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("could not parse " + what + " '" + text + "'");
  }
}

}  // namespace

void write_density_csv(std::ostream& out, const DensityCurve& curve, const ConfigLines& config) {
  write_config_comments(out, config);
  out << "# params: a=" << format_double(curve.params.a) << ",nu=" << format_double(curve.params.nu)
      << ",gamma=" << format_double(curve.params.gamma) << ",regime=" << to_string(curve.regime)
      << ",normalization_error=" << format_double(curve.normalization_error) << '\n';
  out << "t,rho\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i)
    out << format_double(curve.grid[i]) << ',' << format_double(curve.values[i]) << '\n';
  for (const auto& atom : curve.atoms)
    out << "# atom," << format_double(atom.location) << ',' << format_double(atom.mass) << '\n';
}

json density_json(const DensityCurve& curve, const ConfigLines& config) {
  json atoms = json::array();
  for (const auto& atom : curve.atoms) atoms.push_back({{"location", atom.location}, {"mass", atom.mass}});
  json j = header_json(config);
  j["params"] = {{"a", curve.params.a}, {"nu", curve.params.nu}, {"gamma", curve.params.gamma}};
  j["regime"] = to_string(curve.regime);
  j["grid"] = curve.grid;
  j["rho"] = curve.values;
  j["atoms"] = atoms;
  j["normalization_error"] = curve.normalization_error;
  return j;
}

DensityCurve read_density_csv(std::istream& in) {
  DensityCurve curve;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# atom,", 0) == 0) {
      std::istringstream ss(line.substr(7));
      std::string loc;
      std::string mass;
      std::getline(ss, loc, ',');
      std::getline(ss, mass, ',');
      curve.atoms.push_back({parse_number(loc, "atom location"), parse_number(mass, "atom mass")});
      continue;
    }
    if (line[0] == '#') continue;
    if (!header) {
      if (line != "t,rho") throw UsageError("density CSV must start with the header t,rho");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw UsageError("malformed density row '" + line + "'");
    curve.grid.push_back(parse_number(line.substr(0, comma), "grid point"));
    curve.values.push_back(parse_number(line.substr(comma + 1), "density value"));
  }
  if (!header) throw UsageError("density CSV has no t,rho header");
  curve.normalization_error = std::abs(curve.mass() - 1.0);
  return curve;
}

void write_spectrum_csv(std::ostream& out, const SpectrumSample& sample, const ConfigLines& config) {
  write_config_comments(out, config);
  const auto& c = sample.config;
  out << "# p,n,model,kernel,seed\n";
  out << "# " << c.p << ',' << c.n << ',' << to_string(c.model) << ',' << c.kernel.spec() << ',' << c.seed << '\n';
  out << "# trial=" << sample.trial << ",stream_seed=" << sample.stream_seed
      << ",spectral_norm=" << format_double(sample.spectral_norm)
      << ",replaced_nonfinite=" << sample.replaced_nonfinite << '\n';
  out << "lambda\n";
  for (double lambda : sample.eigenvalues) out << format_double(lambda) << '\n';
}

json spectrum_json(const SpectrumSample& sample, const ConfigLines& config) {
  const auto& c = sample.config;
  json j = header_json(config);
  j["p"] = c.p;
  j["n"] = c.n;
  j["model"] = to_string(c.model);
  j["kernel"] = c.kernel.spec();
  j["seed"] = c.seed;
  j["trial"] = sample.trial;
  j["stream_seed"] = sample.stream_seed;
  j["spectral_norm"] = sample.spectral_norm;
  j["replaced_nonfinite"] = sample.replaced_nonfinite;
  j["eigenvalues"] = sample.eigenvalues;
  return j;
}

std::vector<double> read_spectrum_csv(std::istream& in) {
  std::vector<double> out;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "lambda") throw UsageError("spectrum CSV must start with the header lambda");
      header = true;
      continue;
    }
    out.push_back(parse_number(line, "eigenvalue"));
  }
  if (!header) throw UsageError("spectrum CSV has no lambda header");
  return out;
}

void write_coefficients_csv(std::ostream& out, const CoefficientTable& table, const ConfigLines& config) {
  write_config_comments(out, config);
  out << "# kernel=" << table.kernel;
  if (table.p) out << ",p=" << *table.p;
  out << '\n';
  out << "l,c,cumulative_sq,nu,a" << (table.p ? ",a_p" : "") << '\n';
  double running = 0.0;
  for (std::size_t l = 0; l < table.coeffs.size(); ++l) {
    if (l >= 1) running += table.coeffs[l] * table.coeffs[l];
    out << l << ',' << format_double(table.coeffs[l]) << ',' << format_double(running) << ','
        << format_double(table.limit.nu) << ',' << format_double(table.limit.a);
    if (table.p) out << ',' << format_double(table.finite_p.at(l));
    out << '\n';
  }
}

json coefficients_json(const CoefficientTable& table, const ConfigLines& config) {
  json j = header_json(config);
  j["kernel"] = table.kernel;
  j["coefficients"] = table.coeffs;
  if (table.p) {
    j["p"] = *table.p;
    j["finite_p"] = table.finite_p;
  }
  json running = json::array();
  double acc = 0.0;
  for (std::size_t l = 0; l < table.coeffs.size(); ++l) {
    if (l >= 1) acc += table.coeffs[l] * table.coeffs[l];
    running.push_back(acc);
  }
  j["cumulative_sq"] = running;
  j["nu"] = table.limit.nu;
  j["a"] = table.limit.a;
  j["provenance"] = table.limit.provenance == Provenance::closed_form ? "closed_form" : "quadrature";
  return j;
}

json report_json(const ComparisonReport& report, const ConfigLines& config) {
  const auto& c = report.config;
  json j = header_json(config);
  j["config"] = config_json(config);
  j["config"]["resolved"] = {
      {"p", c.ensemble.p},
      {"n", c.ensemble.n},
      {"gamma", c.ensemble.gamma()},
      {"model", to_string(c.ensemble.model)},
      {"kernel", c.ensemble.kernel.spec()},
      {"seed", c.ensemble.seed},
      {"trials", c.trials},
      {"bins", c.bins},
      {"params", {{"a", c.params.a}, {"nu", c.params.nu}, {"gamma", c.params.gamma}}},
      {"regime", to_string(report.regime)},
      {"atom_window", report.atom_window},
  };
  json st = json::array();
  for (const auto& e : report.stieltjes)
    st.push_back({{"z", complex_json(e.z)}, {"error", e.error}});
  j["metrics"] = {
      {"cdf_sup_distance", report.cdf_sup_distance},
      {"cdf_sup_distance_strict", report.cdf_sup_distance_strict},
      {"hist_l1", report.hist_l1},
      {"moment_errors", {{"mean", report.moments.mean_abs}, {"second_moment", report.moments.second_moment}}},
      {"stieltjes_point_errors", st},
      {"normalization_error", report.normalization_error},
  };
  json seeds = json::array();
  for (const auto& m : report.per_seed) {
    json pst = json::array();
    for (const auto& e : m.stieltjes)
      pst.push_back({{"z", complex_json(e.z)},
                     {"empirical", complex_json(e.empirical)},
                     {"theory", complex_json(e.theory)},
                     {"error", e.error}});
    seeds.push_back({{"trial", m.trial},
                     {"seed", m.seed},
                     {"cdf_sup_distance", m.cdf_sup_distance},
                     {"cdf_sup_distance_strict", m.cdf_sup_distance_strict},
                     {"hist_l1", m.hist_l1},
                     {"moment_errors", {{"mean", m.moments.mean_abs}, {"second_moment", m.moments.second_moment}}},
                     {"stieltjes_point_errors", pst},
                     {"spectral_norm", m.spectral_norm},
                     {"replaced_nonfinite", m.replaced_nonfinite}});
  }
  j["per_seed"] = seeds;
  j["seeds_used"] = json::array();
  for (const auto& m : report.per_seed) j["seeds_used"].push_back(m.seed);
  j["tolerances"] = {{"cdf_sup_distance", c.tolerances.cdf}};
  if (!std::isnan(c.tolerances.hist)) j["tolerances"]["hist_l1"] = c.tolerances.hist;
  if (!std::isnan(c.tolerances.stieltjes)) j["tolerances"]["stieltjes"] = c.tolerances.stieltjes;
  j["pass"] = report.pass;
  j["wall_time"] = report.wall_time;
  return j;
}

json concentration_json(const ConcentrationResult& result, const ConfigLines& config) {
  json j = header_json(config);
  j["z"] = complex_json(result.z);
  j["gamma"] = result.gamma;
  j["trials"] = result.trials;
  j["slope"] = result.slope;
  j["intercept"] = result.intercept;
  j["slope_ci95"] = json::array({result.ci_lo, result.ci_hi});
  json rows = json::array();
  for (const auto& row : result.rows) {
    json values = json::array();
    for (const auto v : row.values) values.push_back(complex_json(v));
    rows.push_back({{"n", row.n},
                    {"p", row.p},
                    {"mean_m", complex_json(row.mean_m)},
                    {"std_m", row.std_m},
                    {"values", values},
                    {"seeds", row.seeds}});
  }
  j["rows"] = rows;
  return j;
}

json norm_growth_json(const NormGrowthResult& result, const ConfigLines& config) {
  json j = header_json(config);
  j["l"] = result.l;
  j["gamma"] = result.gamma;
  j["model"] = to_string(result.model);
  j["ratio_nonincreasing"] = result.ratio_nonincreasing;
  j["ratio_nonincreasing_tail"] = result.ratio_nonincreasing_tail;
  j["appears_bounded"] = result.appears_bounded;
  if (result.l == 1) {
    j["linear_bound"] = result.linear_bound;
    j["linear_bound_ok"] = result.linear_bound_ok;
  }
  json rows = json::array();
  for (const auto& row : result.rows)
    rows.push_back({{"n", row.n},
                    {"p", row.p},
                    {"mean_norm", row.mean_norm},
                    {"ratio", row.ratio},
                    {"max_eigenvalue_mean", row.max_eigenvalue_mean},
                    {"norms", row.norms},
                    {"seeds", row.seeds}});
  j["rows"] = rows;
  return j;
}

void write_concentration_csv(std::ostream& out, const ConcentrationResult& result, const ConfigLines& config) {
  write_config_comments(out, config);
  out << "# slope=" << format_double(result.slope) << ",ci95=[" << format_double(result.ci_lo) << ','
      << format_double(result.ci_hi) << "]\n";
  for (const auto& row : result.rows) {
    out << "# seeds n=" << row.n << ':';
    for (auto s : row.seeds) out << ' ' << s;
    out << '\n';
  }
  out << "n,p,std_m,mean_re,mean_im\n";
  for (const auto& row : result.rows)
    out << row.n << ',' << row.p << ',' << format_double(row.std_m) << ',' << format_double(row.mean_m.real()) << ','
        << format_double(row.mean_m.imag()) << '\n';
}

void write_norm_growth_csv(std::ostream& out, const NormGrowthResult& result, const ConfigLines& config) {
  write_config_comments(out, config);
  out << "# l=" << result.l << ",ratio_nonincreasing=" << (result.ratio_nonincreasing ? "true" : "false")
      << ",appears_bounded=" << (result.appears_bounded ? "true" : "false");
  if (result.l == 1)
    out << ",linear_bound=" << format_double(result.linear_bound)
        << ",linear_bound_ok=" << (result.linear_bound_ok ? "true" : "false");
  out << '\n';
  for (const auto& row : result.rows) {
    out << "# seeds n=" << row.n << ':';
    for (auto s : row.seeds) out << ' ' << s;
    out << '\n';
  }
  out << "n,p,mean_norm,ratio,max_eigenvalue_mean\n";
  for (const auto& row : result.rows)
    out << row.n << ',' << row.p << ',' << format_double(row.mean_norm) << ',' << format_double(row.ratio) << ','
        << format_double(row.max_eigenvalue_mean) << '\n';
}

}  // namespace kspec
