#include "cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using kspec::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  return rows;
}

std::vector<double> split(const std::string& row) {
  std::vector<double> v;
  std::istringstream is(row);
  std::string cell;
  while (std::getline(is, cell, ',')) v.push_back(std::stod(cell));
  return v;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kspec_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("coeffs: sign kernel has only odd terms") {
  const auto r = call({"coeffs", "--kernel", "sign", "-L", "10"});
  REQUIRE(r.code == 0);
  const auto rows = data_lines(r.out);
  REQUIRE(rows.size() == 12);
  CHECK(rows[0] == "l,c,cumulative_sq,nu,a");
  for (int l = 0; l <= 10; ++l) {
    const auto v = split(rows[l + 1]);
    if (l % 2 == 0) CHECK(std::abs(v[1]) <= 1e-12);
  }
  CHECK(split(rows[2])[1] == doctest::Approx(0.797885).epsilon(1e-6));
}

TEST_CASE("coeffs: linear kernel is a single degree-one term") {
  const auto r = call({"coeffs", "--kernel", "linear:c=1", "-L", "6"});
  REQUIRE(r.code == 0);
  const auto rows = data_lines(r.out);
  for (int l = 0; l <= 6; ++l) CHECK(split(rows[l + 1])[1] == doctest::Approx(l == 1 ? 1.0 : 0.0));
}

TEST_CASE("coeffs: finite-p degree-one coefficient approaches its limit") {
  auto a1 = [](const std::string& p) {
    const auto r = call({"coeffs", "--kernel", "power_odd:r=0.25", "-L", "10", "--p", p});
    REQUIRE(r.code == 0);
    const auto rows = data_lines(r.out);
    CHECK(rows[0] == "l,c,cumulative_sq,nu,a,a_p");
    return split(rows[2])[5];
  };
  const double limit = 0.79726;
  const double small = a1("400");
  const double large = a1("4000");
  CHECK(std::abs(small - limit) <= 1e-3);
  CHECK(std::abs(large - limit) < std::abs(small - limit));
}

TEST_CASE("usage errors exit 2") {
  CHECK(call({"coeffs", "--kernel", "sine"}).code == 2);
  CHECK(call({"coeffs", "--kernel", "sign:r=1"}).code == 2);
  const auto bad = call({"density", "--a", "2", "--nu", "1", "--gamma", "1"});
  CHECK(bad.code == 2);
  CHECK(!bad.err.empty());
  CHECK(call({"plot"}).code == 2);
  CHECK(call({"simulate", "--kernel", "sign", "-p", "10", "-n", "20", "--gamma", "0.5"}).code == 2);
  CHECK(call({"density", "--a", "0", "--nu", "1", "--gamma", "1", "--grid-lo", "1", "--grid-hi", "0"}).code == 2);
  CHECK(call({"simulate", "--kernel", "sign", "-p", "10", "-n", "20", "--threads", "0"}).code == 2);
}

TEST_CASE("density: semicircle on [-2, 2]") {
  const auto r = call({"density", "--a", "0", "--nu", "1", "--gamma", "1"});
  REQUIRE(r.code == 0);
  const auto rows = data_lines(r.out);
  CHECK(rows[0] == "t,rho");
  double mass = 0.0;
  std::vector<double> prev;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto v = split(rows[i]);
    if (std::abs(v[0]) > 2.0 + 1e-9) CHECK(v[1] == 0.0);
    if (std::abs(v[0]) < 1e-3) CHECK(v[1] == doctest::Approx(1.0 / M_PI).epsilon(1e-3));
    if (!prev.empty()) mass += 0.5 * (v[0] - prev[0]) * (v[1] + prev[1]);
    prev = v;
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("density: sign kernel curve and atom line") {
  const auto sign = call({"density", "--kernel", "sign", "--gamma", "0.1"});
  REQUIRE(sign.code == 0);
  CHECK(sign.out.find("# params: a=0.7978845608028654,nu=1,gamma=0.1") != std::string::npos);
  const auto atom = call({"density", "--a", "1", "--nu", "1", "--gamma", "0.5"});
  REQUIRE(atom.code == 0);
  CHECK(atom.out.find("\n# atom,-1,0.5\n") != std::string::npos);
  const auto j = nlohmann::json::parse(call({"density", "--a", "1", "--nu", "1", "--gamma", "0.5", "--format", "json"}).out);
  CHECK(j["atoms"][0]["mass"] == 0.5);
}

TEST_CASE("simulate: full-size draw") {
  const auto r = call({"simulate", "--kernel", "sign", "--p", "400", "--n", "4000", "--seed", "1"});
  REQUIRE(r.code == 0);
  const auto rows = data_lines(r.out);
  CHECK(rows[0] == "lambda");
  CHECK(rows.size() == 4001);
}

TEST_CASE("simulate: reproducible, thread-independent, sphere matches gaussian for sign") {
  const std::vector<std::string> base{"simulate", "--kernel", "sign", "--p", "100", "--n", "600", "--seed", "9"};
  const auto a = call(base);
  const auto b = call(base);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  auto threaded = base;
  threaded.insert(threaded.end(), {"--threads", "3"});
  CHECK(data_lines(call(threaded).out) == data_lines(a.out));

  setenv("KERNEL_SPECTRA_THREADS", "2", 1);
  const auto env = call(base);
  unsetenv("KERNEL_SPECTRA_THREADS");
  REQUIRE(env.code == 0);
  CHECK(data_lines(env.out) == data_lines(a.out));

  auto sphere = base;
  sphere.insert(sphere.end(), {"--model", "sphere"});
  CHECK(data_lines(call(sphere).out) == data_lines(a.out));
}

TEST_CASE("simulate: memory ceiling exits 3") {
  CHECK(call({"simulate", "--kernel", "sign", "--p", "100", "--n", "9000"}).code == 3);
  CHECK(call({"simulate", "--kernel", "sign", "--p", "100", "--n", "600", "--max-n", "500"}).code == 3);
}

TEST_CASE("compare: sign kernel at full size passes") {
  const auto r = call({"compare", "--kernel", "sign", "--p", "400", "--n", "4000", "--tol-cdf", "0.03"});
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["pass"] == true);
  CHECK(j["metrics"]["cdf_sup_distance"].get<double>() <= 0.03);
}

TEST_CASE("compare: mismatched gamma fails with exit 1") {
  const auto r = call({"compare", "--kernel", "sign", "--p", "200", "--n", "1000", "--theory-gamma", "0.6"});
  CHECK(r.code == 1);
  CHECK(nlohmann::json::parse(r.out)["pass"] == false);
}

TEST_CASE("compare: even power kernel against the pure semicircle") {
  const auto r = call({"compare", "--kernel", "power_even:r=0.25", "--gamma", "0.5", "--p", "1000", "--a", "0", "--nu",
                       "0.2161", "--tol-cdf", "0.05"});
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["metrics"]["cdf_sup_distance"].get<double>() <= 0.05);
}

TEST_CASE("config file: command line wins over file, file wins over defaults") {
  const auto cfg = scratch("run.cfg");
  {
    std::ofstream f(cfg);
    f << "kernel=linear:c=1\nmax-degree=2\n";
  }
  const auto from_file = call({"coeffs", "--config", cfg.string()});
  REQUIRE(from_file.code == 0);
  CHECK(data_lines(from_file.out).size() == 4);
  CHECK(from_file.out.find("# config: kernel=linear:c=1") != std::string::npos);

  const auto overridden = call({"coeffs", "--config", cfg.string(), "-L", "4"});
  REQUIRE(overridden.code == 0);
  CHECK(data_lines(overridden.out).size() == 6);
}

TEST_CASE("replay reproduces csv and json outputs") {
  const auto first = scratch("spectrum.csv");
  const auto again = scratch("spectrum_again.csv");
  REQUIRE(call({"simulate", "--kernel", "power_odd:r=0.25", "--p", "60", "--n", "200", "--seed", "4", "--trial", "2",
                "--model", "sphere", "-o", first.string()})
              .code == 0);
  REQUIRE(call({"--replay", first.string(), "-o", again.string()}).code == 0);
  CHECK(slurp(first) == slurp(again));

  const auto dj = scratch("density.json");
  const auto dj2 = scratch("density_again.json");
  REQUIRE(call({"density", "--kernel", "sign", "--gamma", "0.3", "--grid-points", "200", "--format", "json", "-o",
                dj.string()})
              .code == 0);
  REQUIRE(call({"--replay", dj.string(), "-o", dj2.string()}).code == 0);
  CHECK(slurp(dj) == slurp(dj2));
}

TEST_CASE("sweeps run and echo their configuration") {
  const auto conc = call({"sweep", "--sweep", "concentration", "--kernel", "sign", "--gamma", "1", "--sizes", "40,80",
                          "--trials", "20"});
  REQUIRE(conc.code == 0);
  CHECK(conc.out.find("# config: sweep=concentration") != std::string::npos);
  CHECK(data_lines(conc.out).size() == 3);

  const auto norm = call({"sweep", "--sweep", "norm-growth", "--l", "2", "--gamma", "1", "--sizes", "50,100",
                          "--trials", "3", "--format", "json"});
  REQUIRE(norm.code == 0);
  const auto j = nlohmann::json::parse(norm.out);
  CHECK(j["rows"].size() == 2);

  CHECK(call({"sweep", "--sweep", "concentration", "--kernel", "sign", "--gamma", "1", "--sizes", "40,80", "--trials",
              "5"})
            .code == 2);
}
