#include "cli.hpp"

#include "kspec/ensemble.hpp"
#include "kspec/errors.hpp"
#include "kspec/expansion.hpp"
#include "kspec/kernels.hpp"
#include "kspec/limit_law.hpp"
#include "kspec/quadrature.hpp"
#include "kspec/serialize.hpp"
#include "kspec/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace kspec::cli {

namespace {

struct RunConfig {
  std::string command;
  std::string kernel = "sign";
  std::optional<int> p;
  std::optional<int> n;
  std::optional<double> gamma;
  std::optional<double> a;
  std::optional<double> nu;
  std::optional<double> theory_gamma;
  std::string model = "gaussian";
  std::uint64_t seed = 1;
  std::uint64_t trial = 0;
  int max_degree = 10;
  std::optional<double> grid_lo;
  std::optional<double> grid_hi;
  int grid_points = 4000;
  int bins = 60;
  int threads = 1;
  std::string out;
  std::string format = "csv";
  std::optional<int> trials;
  std::string sweep = "concentration";
  std::string sizes = "250,500,1000,2000";
  int l = 2;
  double z_re = 0.0;
  double z_im = 1.0;
  double tol_cdf = 0.05;
  std::optional<double> tol_hist;
  std::optional<double> tol_stieltjes;
  std::optional<double> atom_window;
  int max_n = kDefaultMaxN;
};

// Keys that are recorded but not replayed.
constexpr const char* kDerivedPrefix = "derived.";

std::string fmt(double v) { return format_double(v); }

struct Resolved {
  int p = 0;
  int n = 0;
  double gamma = 0.0;
};

// Exactly two of p, n, gamma; the third is derived.
Resolved resolve_dimensions(const RunConfig& c) {
  const int given = (c.p ? 1 : 0) + (c.n ? 1 : 0) + (c.gamma ? 1 : 0);
  if (given != 2) throw UsageError("give exactly two of --p, --n, --gamma");
  Resolved r;
  if (c.p && c.n) {
    r = {*c.p, *c.n, static_cast<double>(*c.p) / *c.n};
  } else if (c.p) {
    if (!(*c.gamma > 0.0)) throw UsageError("--gamma must be positive");
    r = {*c.p, static_cast<int>(std::lround(*c.p / *c.gamma)), *c.gamma};
  } else {
    if (!(*c.gamma > 0.0)) throw UsageError("--gamma must be positive");
    r = {static_cast<int>(std::lround(*c.gamma * *c.n)), *c.n, *c.gamma};
  }
  if (r.p < 1 || r.n < 2) throw UsageError("resolved dimensions need p >= 1 and n >= 2");
  return r;
}

// gamma alone, or p and n.
double resolve_gamma(const RunConfig& c) {
  if (c.gamma && !c.p && !c.n) {
    if (!(*c.gamma > 0.0)) throw UsageError("--gamma must be positive");
    return *c.gamma;
  }
  return resolve_dimensions(c).gamma;
}

void record_dimensions(ConfigLines& lines, const RunConfig& c, const Resolved& r) {
  lines.emplace_back(c.p ? "p" : std::string(kDerivedPrefix) + "p", std::to_string(r.p));
  lines.emplace_back(c.n ? "n" : std::string(kDerivedPrefix) + "n", std::to_string(r.n));
  lines.emplace_back(c.gamma ? "gamma" : std::string(kDerivedPrefix) + "gamma", fmt(r.gamma));
}

std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 2) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("--sizes expects a comma-separated list of integers >= 2, got '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("--sizes is empty");
  return out;
}

MomentModel moment_model_for(VectorModel m) {
  switch (m) {
    case VectorModel::gaussian:
      return MomentModel::gaussian_inner;
    case VectorModel::sphere:
      return MomentModel::sphere_inner;
    case VectorModel::hypercube:
      return MomentModel::unit_gaussian;
  }
  return MomentModel::gaussian_inner;
}

ModelParams theory_params(const RunConfig& c, double gamma, ConfigLines& lines) {
  ModelParams params;
  if (c.a || c.nu) {
    if (!(c.a && c.nu)) throw UsageError("--a and --nu must be given together");
    params = {*c.a, *c.nu, gamma};
    lines.emplace_back("a", fmt(*c.a));
    lines.emplace_back("nu", fmt(*c.nu));
  } else {
    const Kernel k = parse_kernel(c.kernel);
    const LimitConstants lc = limit_constants(k);
    params = {lc.a, lc.nu, gamma};
    lines.emplace_back("kernel", c.kernel);
    lines.emplace_back(std::string(kDerivedPrefix) + "a", fmt(lc.a));
    lines.emplace_back(std::string(kDerivedPrefix) + "nu", fmt(lc.nu));
  }
  params.validate();
  return params;
}

void check_format(const RunConfig& c) {
  if (c.format != "csv" && c.format != "json") throw UsageError("--format must be csv or json");
}

// Each command fills `lines` with the resolved configuration and writes its output.
int cmd_coeffs(const RunConfig& c, std::ostream& out) {
  check_format(c);
  if (c.max_degree < 0 || c.max_degree > kMaxDegree)
    throw UsageError("--max-degree must lie in [0, " + std::to_string(kMaxDegree) + "]");
  ConfigLines lines{{"command", c.command}, {"kernel", c.kernel}, {"max-degree", std::to_string(c.max_degree)}};
  const Kernel k = parse_kernel(c.kernel);
  CoefficientTable table;
  table.kernel = k.spec();
  table.limit = limit_constants(k);
  table.coeffs = expansion_coefficients(k, ExpansionBasis::hermite(), c.max_degree, gauss_hermite_rule(128));
  if (c.p) {
    const VectorModel vm = parse_vector_model(c.model);
    lines.emplace_back("p", std::to_string(*c.p));
    lines.emplace_back("model", c.model);
    table.p = *c.p;
    table.finite_p = inner_expansion_coefficients(k, model_moments(moment_model_for(vm), *c.p, 2 * c.max_degree),
                                                  c.max_degree);
  }
  lines.emplace_back("format", c.format);
  if (c.format == "json")
    out << coefficients_json(table, lines).dump(2) << '\n';
  else
    write_coefficients_csv(out, table, lines);
  return ok;
}

int cmd_density(const RunConfig& c, std::ostream& out) {
  check_format(c);
  ConfigLines lines{{"command", c.command}};
  const double gamma = resolve_gamma(c);
  if (c.p) lines.emplace_back("p", std::to_string(*c.p));
  if (c.n) lines.emplace_back("n", std::to_string(*c.n));
  lines.emplace_back(c.gamma ? "gamma" : std::string(kDerivedPrefix) + "gamma", fmt(gamma));
  const ModelParams params = theory_params(c, gamma, lines);
  std::vector<double> grid;
  if (c.grid_lo || c.grid_hi) {
    if (!(c.grid_lo && c.grid_hi)) throw UsageError("--grid-lo and --grid-hi must be given together");
    if (!(*c.grid_lo < *c.grid_hi)) throw UsageError("grid needs lo < hi");
    if (c.grid_points < 2) throw UsageError("--grid-points must be at least 2");
    for (int i = 0; i < c.grid_points; ++i)
      grid.push_back(*c.grid_lo + (*c.grid_hi - *c.grid_lo) * i / (c.grid_points - 1));
    lines.emplace_back("grid-lo", fmt(*c.grid_lo));
    lines.emplace_back("grid-hi", fmt(*c.grid_hi));
  } else {
    if (c.grid_points < 16) throw UsageError("--grid-points must be at least 16 for the automatic grid");
    grid = default_grid(params, c.grid_points);
  }
  lines.emplace_back("grid-points", std::to_string(c.grid_points));
  lines.emplace_back("format", c.format);
  const DensityCurve curve = density_curve(params, grid);
  if (c.format == "json")
    out << density_json(curve, lines).dump(2) << '\n';
  else
    write_density_csv(out, curve, lines);
  return ok;
}

EnsembleConfig ensemble_config(const RunConfig& c, ConfigLines& lines) {
  const Resolved r = resolve_dimensions(c);
  record_dimensions(lines, c, r);
  EnsembleConfig cfg{r.p, r.n, parse_vector_model(c.model), parse_kernel(c.kernel), c.seed};
  lines.emplace_back("kernel", c.kernel);
  lines.emplace_back("model", c.model);
  lines.emplace_back("seed", std::to_string(c.seed));
  return cfg;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  check_format(c);
  ConfigLines lines{{"command", c.command}};
  const EnsembleConfig cfg = ensemble_config(c, lines);
  lines.emplace_back("trial", std::to_string(c.trial));
  lines.emplace_back("max-n", std::to_string(c.max_n));
  lines.emplace_back("format", c.format);
  const SpectrumSample s = simulate(cfg, c.trial, c.threads, c.max_n);
  if (c.format == "json")
    out << spectrum_json(s, lines).dump(2) << '\n';
  else
    write_spectrum_csv(out, s, lines);
  return ok;
}

int cmd_compare(const RunConfig& c, std::ostream& out) {
  ConfigLines lines{{"command", c.command}};
  ComparisonConfig cc;
  cc.ensemble = ensemble_config(c, lines);
  if (cc.ensemble.n > c.max_n)
    throw ResourceError("n = " + std::to_string(cc.ensemble.n) + " exceeds --max-n " + std::to_string(c.max_n));
  double gamma = cc.ensemble.gamma();
  if (c.theory_gamma) {
    gamma = *c.theory_gamma;
    lines.emplace_back("theory-gamma", fmt(gamma));
  }
  ConfigLines theory;
  cc.params = theory_params(c, gamma, theory);
  for (auto& kv : theory)
    if (kv.first != "kernel") lines.push_back(kv);
  cc.trials = c.trials.value_or(1);
  cc.bins = c.bins;
  cc.grid_points = c.grid_points;
  if (c.atom_window) cc.atom_window = *c.atom_window;
  cc.z_list = {cplx(c.z_re, c.z_im)};
  cc.tolerances.cdf = c.tol_cdf;
  if (c.tol_hist) cc.tolerances.hist = *c.tol_hist;
  if (c.tol_stieltjes) cc.tolerances.stieltjes = *c.tol_stieltjes;
  cc.threads = c.threads;
  lines.emplace_back("trials", std::to_string(cc.trials));
  lines.emplace_back("bins", std::to_string(cc.bins));
  lines.emplace_back("grid-points", std::to_string(cc.grid_points));
  if (c.atom_window) lines.emplace_back("atom-window", fmt(*c.atom_window));
  lines.emplace_back("z-re", fmt(c.z_re));
  lines.emplace_back("z-im", fmt(c.z_im));
  lines.emplace_back("tol-cdf", fmt(c.tol_cdf));
  if (c.tol_hist) lines.emplace_back("tol-hist", fmt(*c.tol_hist));
  if (c.tol_stieltjes) lines.emplace_back("tol-stieltjes", fmt(*c.tol_stieltjes));
  const ComparisonReport report = compare(cc);
  out << report_json(report, lines).dump(2) << '\n';
  return report.pass ? ok : comparison_failed;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  check_format(c);
  ConfigLines lines{{"command", c.command}, {"sweep", c.sweep}};
  const double gamma = resolve_gamma(c);
  if (c.p) lines.emplace_back("p", std::to_string(*c.p));
  if (c.n) lines.emplace_back("n", std::to_string(*c.n));
  lines.emplace_back(c.gamma ? "gamma" : std::string(kDerivedPrefix) + "gamma", fmt(gamma));
  const std::vector<int> sizes = parse_sizes(c.sizes);
  for (int n : sizes)
    if (n > c.max_n) throw ResourceError("size " + std::to_string(n) + " exceeds --max-n " + std::to_string(c.max_n));
  const int trials = c.trials.value_or(20);
  const VectorModel vm = parse_vector_model(c.model);
  lines.emplace_back("sizes", c.sizes);
  lines.emplace_back("trials", std::to_string(trials));
  lines.emplace_back("model", c.model);
  lines.emplace_back("seed", std::to_string(c.seed));
  if (c.sweep == "concentration") {
    if (!(c.z_im > 0.0)) throw UsageError("--z-im must be positive");
    lines.emplace_back("kernel", c.kernel);
    lines.emplace_back("z-re", fmt(c.z_re));
    lines.emplace_back("z-im", fmt(c.z_im));
    lines.emplace_back("format", c.format);
    EnsembleConfig base{std::max(1, static_cast<int>(std::lround(gamma * sizes.front()))), sizes.front(), vm,
                        parse_kernel(c.kernel), c.seed};
    const auto result = concentration_sweep(base, cplx(c.z_re, c.z_im), sizes, trials, c.threads, 200, gamma);
    if (c.format == "json")
      out << concentration_json(result, lines).dump(2) << '\n';
    else
      write_concentration_csv(out, result, lines);
  } else if (c.sweep == "norm-growth") {
    lines.emplace_back("l", std::to_string(c.l));
    lines.emplace_back("format", c.format);
    const auto result = norm_growth_sweep(c.l, gamma, sizes, trials, c.seed, vm, c.threads);
    if (c.format == "json")
      out << norm_growth_json(result, lines).dump(2) << '\n';
    else
      write_norm_growth_csv(out, result, lines);
  } else {
    throw UsageError("--sweep must be concentration or norm-growth");
  }
  return ok;
}

std::string quote(const std::string& v) { return "\"" + v + "\""; }

// Turns `--replay FILE` into `<command> --config <tmp>` built from the file's
// embedded configuration. Command-line flags still take precedence.
std::vector<std::string> expand_replay(const std::vector<std::string>& args, std::filesystem::path& tmp) {
  auto it = std::find(args.begin(), args.end(), "--replay");
  if (it == args.end()) return args;
  if (std::next(it) == args.end()) throw UsageError("--replay needs a file");
  if (std::find(args.begin(), args.end(), "--config") != args.end())
    throw UsageError("--replay and --config cannot be combined");
  const std::string file = *std::next(it);
  std::ifstream in(file);
  if (!in) throw UsageError("cannot open replay file '" + file + "'");
  ConfigLines lines;
  in >> std::ws;
  if (in.peek() == '{') {
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("config")) throw UsageError("replay file '" + file + "' is not valid JSON");
    for (const auto& [key, value] : j["config"].items())
      if (value.is_string()) lines.emplace_back(key, value.get<std::string>());
  } else {
    lines = read_config_comments(in);
  }
  std::string command;
  std::ostringstream cfg;
  for (const auto& [key, value] : lines) {
    if (key == "command") {
      command = value;
    } else if (key.rfind(kDerivedPrefix, 0) != 0) {
      cfg << key << '=' << quote(value) << '\n';
    }
  }
  if (command.empty()) throw UsageError("replay file '" + file + "' carries no embedded configuration");
  tmp = std::filesystem::temp_directory_path() /
        ("kernel-spectra-replay-" + std::to_string(std::hash<std::string>{}(file + cfg.str())) + ".cfg");
  std::ofstream(tmp) << cfg.str();
  std::vector<std::string> out;
  const bool has_command = !args.empty() && args.front().rfind("-", 0) != 0;
  if (!has_command) out.push_back(command);
  for (auto a = args.begin(); a != args.end(); ++a) {
    if (a == it) {
      out.push_back("--config");
      out.push_back(tmp.string());
      ++a;
      continue;
    }
    out.push_back(*a);
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Spectra of inner-product kernel random matrices: limit laws and Monte Carlo checks",
               "kernel-spectra"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config", "", "flat key=value file mirroring the long flag names");
  app.add_option("command", c.command, "coeffs | density | simulate | compare | sweep")
      ->required()
      ->check(CLI::IsMember({"coeffs", "density", "simulate", "compare", "sweep"}));
  app.add_option("--kernel", c.kernel, "kernel spec, e.g. sign, power_odd:r=0.25, linear:c=1, hermite:l=2")
      ->capture_default_str();
  app.add_option("-p,--p", c.p, "dimension");
  app.add_option("-n,--n", c.n, "matrix size");
  app.add_option("--gamma", c.gamma, "aspect ratio p/n");
  app.add_option("--a", c.a, "limit linear coefficient (density/compare theory)");
  app.add_option("--nu", c.nu, "limit variance (density/compare theory)");
  app.add_option("--theory-gamma", c.theory_gamma, "gamma of the theory curve in compare (default p/n)");
  app.add_option("--model", c.model, "vector model")
      ->check(CLI::IsMember({"gaussian", "sphere", "hypercube"}))
      ->capture_default_str();
  app.add_option("--seed", c.seed, "base seed")->capture_default_str();
  app.add_option("--trial", c.trial, "trial index of a single simulation")->capture_default_str();
  app.add_option("-L,--max-degree", c.max_degree, "expansion degree for coeffs")->capture_default_str();
  app.add_option("--grid-lo", c.grid_lo, "uniform density grid start");
  app.add_option("--grid-hi", c.grid_hi, "uniform density grid end");
  app.add_option("--grid-points", c.grid_points, "density grid size")->capture_default_str();
  app.add_option("--bins", c.bins, "histogram bins for compare")->capture_default_str();
  app.add_option("--threads", c.threads, "worker threads")
      ->envname("KERNEL_SPECTRA_THREADS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("-o,--out", c.out, "output file (default stdout)");
  app.add_option("--format", c.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--trials", c.trials, "trials (compare default 1, sweep default 20)");
  app.add_option("--sweep", c.sweep, "concentration or norm-growth")
      ->check(CLI::IsMember({"concentration", "norm-growth"}))
      ->capture_default_str();
  app.add_option("--sizes", c.sizes, "comma-separated matrix sizes for sweeps")->capture_default_str();
  app.add_option("--l", c.l, "degree of the orthonormal kernel for norm-growth")->capture_default_str();
  app.add_option("--z-re", c.z_re, "real part of z")->capture_default_str();
  app.add_option("--z-im", c.z_im, "imaginary part of z")->capture_default_str();
  app.add_option("--tol-cdf", c.tol_cdf, "compare: cdf distance tolerance")->capture_default_str();
  app.add_option("--tol-hist", c.tol_hist, "compare: histogram L1 tolerance (off by default)");
  app.add_option("--tol-stieltjes", c.tol_stieltjes, "compare: Stieltjes error tolerance (off by default)");
  app.add_option("--atom-window", c.atom_window, "compare: snapping window around atoms (default automatic)");
  app.add_option("--max-n", c.max_n, "dense matrix ceiling")->capture_default_str();
  std::string replay_file;
  app.add_option("--replay", replay_file, "re-run the configuration embedded in an output file");

  std::filesystem::path tmp;
  try {
    std::vector<std::string> args = expand_replay(raw_args, tmp);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (!tmp.empty()) std::filesystem::remove(tmp);
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return usage;
  }
  if (!tmp.empty()) std::filesystem::remove(tmp);

  try {
    std::ofstream file;
    std::ostringstream buffer;
    int code = ok;
    if (c.command == "coeffs")
      code = cmd_coeffs(c, buffer);
    else if (c.command == "density")
      code = cmd_density(c, buffer);
    else if (c.command == "simulate")
      code = cmd_simulate(c, buffer);
    else if (c.command == "compare")
      code = cmd_compare(c, buffer);
    else
      code = cmd_sweep(c, buffer);
    if (c.out.empty()) {
      out << buffer.str();
    } else {
      file.open(c.out);
      if (!file) throw UsageError("cannot write '" + c.out + "'");
      file << buffer.str();
    }
    return code;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return usage;
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << '\n';
    return resource;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return comparison_failed;
  }
}

}  // namespace kspec::cli
