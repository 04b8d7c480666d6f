#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "drugmarket/cli.hpp"
#include "drugmarket/config.hpp"
#include "drugmarket/errors.hpp"
#include "drugmarket/report.hpp"

using namespace drugmarket;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("DRUGMARKET_TMP");
  const fs::path dir = fs::path(env ? env : fs::temp_directory_path().string()) / "cli_scratch";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write(const std::string& name, const std::string& text) {
  const fs::path path = scratch(name);
  std::ofstream(path) << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t error_line(const std::string& text) {
  try {
    Config::parse(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("config grammar") {
  const Config c = Config::parse(
      "# leading comment\n"
      "mu_p = beta(2, 3)   # trailing comment\n"
      "mu_psi = pareto(1, inf)\n"
      "r = 0.3\n"
      "\n"
      "[solver]\n"
      "kind = dictatorial\n"
      "price_grid = 256\n"
      "[sweep]\n"
      "param = lambda\n"
      "values = [1, 2.5, -3e-1]\n"
      "[cohort]\n"
      "file = data/cohort-1.csv\n"
      "model = \"a #1 path\"\n");
  const ConfigEntry* p = c.find("", "mu_p");
  REQUIRE(p);
  CHECK(p->value.type == ConfigValue::Type::kCall);
  CHECK(p->value.word == "beta");
  REQUIRE(p->value.items.size() == 2);
  CHECK(p->value.items[1].number == 3);
  CHECK(p->line == 2);
  CHECK(std::isinf(c.find("", "mu_psi")->value.items[1].number));
  CHECK(c.number("", "r", 0) == 0.3);
  CHECK(c.word("solver", "kind", "") == "dictatorial");
  CHECK(c.count("solver", "price_grid", 0) == 256);
  CHECK(c.count("solver", "premium_grid", 17) == 17);
  CHECK(c.numbers("sweep", "values") == std::vector<double>{1, 2.5, -0.3});
  CHECK(c.word("cohort", "file", "") == "data/cohort-1.csv");
  CHECK(c.word("cohort", "model", "") == "a #1 path");
  CHECK(c.has_section("sweep"));
  CHECK_FALSE(c.has_section("oracle"));

  const Config atoms = Config::parse("[population]\natoms = [(0, 1, 0.5), (1, 1.9, 0.5)]\nr = 0.3\n");
  const auto list = planar_atoms_from(atoms.find("population", "atoms")->value);
  REQUIRE(list.size() == 2);
  CHECK(list[1].psi == 1.9);
}

TEST_CASE("config errors carry positions") {
  CHECK(error_line("r = 0.3\nbogus = 1\n") == 2);
  CHECK(error_line("r = 0.3\nr = 0.4\n") == 2);
  CHECK(error_line("r = 0.3\n\n[nowhere]\n") == 3);
  CHECK(error_line("r 0.3\n") == 1);
  CHECK(error_line("r = 0.3 0.4\n") == 1);
  CHECK(error_line("r =\n") == 1);
  CHECK(error_line("mu_p = beta(2, 3\n") == 1);
  CHECK(error_line("[sweep]\nvalues = [1, 2,\n") == 2);
  CHECK(error_line("[solver\n") == 1);
  CHECK(error_line("r = 0.3\n[cohort]\nfile = \"open\n") == 3);
  try {
    Config::parse("r = 0.3\n[solver]\n  price_grid = 1x\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() > 3);
    CHECK(std::string(e.what()).rfind("line 3", 0) == 0);
  }
}

TEST_CASE("population and solver options from config") {
  const PopulationMeasure m = population_from(Config::parse("mu_p = beta(2,3)\nmu_psi = exp(1)\nr = 0.3\n"));
  CHECK(m.is_product());
  CHECK(m.incidence() == 0.3);
  CHECK(m.describe().find("beta(2,3)") != std::string::npos);

  const PopulationMeasure smooth = population_from(
      Config::parse("[population]\natoms = [(0, 1, 0.5), (1, 1.9, 0.5)]\nsmooth_radius = 0.001\nr = 0.3\n"));
  CHECK(smooth.is_patches());
  const PopulationMeasure exact =
      population_from(Config::parse("[population]\natoms = [(0, 1, 0.5), (1, 1.9, 0.5)]\nr = 0.3\n"));
  CHECK(exact.is_atomic());

  CHECK_THROWS_AS(population_from(Config::parse("mu_p = beta(2,3)\nmu_psi = exp(1)\n")), ConfigError);
  CHECK_THROWS_AS(population_from(Config::parse("mu_p = beta(2,3)\nr = 0.3\n")), ConfigError);
  CHECK_THROWS_AS(population_from(Config::parse("mu_p = gamma(2,3)\nmu_psi = exp(1)\nr = 0.3\n")), ConfigError);
  try {
    population_from(Config::parse("r = 0.3\nmu_p = beta(-2,3)\nmu_psi = exp(1)\n"));
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
  }

  const SolverOptions o = solver_options_from(
      Config::parse("r = 0.3\n[solver]\npremium_grid = 64\nprice_grid = 128\ntheta_max = 5\nthreads = 2\n"));
  CHECK(o.premium_grid == 64);
  CHECK(o.price_grid == 128);
  CHECK(o.theta_max == 5);
  CHECK(o.threads == 2);
}

TEST_CASE("numbers round trip through text") {
  for (double x : {0.0, 1.0, -2.5, 0.123456, 1.5e-9, 3.2e12, 1.0 / 3.0}) {
    const double back = parse_number(format_number(x));
    CHECK(back == doctest::Approx(x).epsilon(5e-6));
    CHECK(format_number(back) == format_number(x));
  }
  CHECK(std::isnan(parse_number(format_number(std::numeric_limits<double>::quiet_NaN()))));
  CHECK(parse_number(format_number(-std::numeric_limits<double>::infinity())) < 0);
  CHECK(std::isinf(parse_number("inf")));
}

TEST_CASE("sweep CSV round trip") {
  std::vector<SweepRow> rows{{1.0, 1.1126, 0.54021, 0.1401, 0.2187, 0.6412, 0.0289, 0.1198},
                             failed_row(2.0)};
  std::stringstream s;
  write_sweep_csv(s, rows);
  CHECK(s.str().rfind(std::string(kSweepHeader) + "\n", 0) == 0);
  const auto back = read_sweep_csv(s);
  REQUIRE(back.size() == 2);
  CHECK(back[0].theta == doctest::Approx(1.1126).epsilon(1e-6));
  CHECK(back[0].premium == doctest::Approx(0.54021).epsilon(1e-6));
  CHECK(back[0].p_p == doctest::Approx(0.1198).epsilon(1e-6));
  CHECK(back[1].param == 2.0);
  CHECK(std::isnan(back[1].theta));
  std::stringstream again;
  write_sweep_csv(again, back);
  std::stringstream first;
  write_sweep_csv(first, rows);
  CHECK(again.str() == first.str());

  std::stringstream wrong("x,theta\n1,2\n");
  CHECK_THROWS(read_sweep_csv(wrong));
}

TEST_CASE("solve writes JSON and CSV") {
  const fs::path cfg = write("exp.conf", "mu_p = beta(2,2)\nmu_psi = exp(1)\nr = 0.3\n");
  const fs::path out = scratch("baseline");
  const Run r = run({"solve", "--config", cfg.string(), "--kind", "baseline", "--out", out.string()});
  REQUIRE(r.code == kExitOk);
  const auto json = nlohmann::json::parse(slurp(out.string() + ".json"));
  CHECK(json["kind"] == "baseline");
  CHECK(json["theta"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(json["premium"].is_null());
  CHECK(json["insurer_enters"] == false);
  CHECK(json["profits"]["producer"].get<double>() == doctest::Approx(0.3 * std::exp(-1.0)).epsilon(1e-9));
  for (const char* key : {"a", "t", "o"}) CHECK(json["masses"].contains(key));
  CHECK(json["diagnostics"].contains("certified"));
  const std::string csv = slurp(out.string() + ".csv");
  CHECK(csv.rfind(std::string(kResultHeader) + "\n", 0) == 0);
  CHECK(csv.find("baseline,1,") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"solve"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({"solve", "--config", scratch("absent.conf").string()}).code == kExitUsage);

  const fs::path bad = write("bad.conf", "mu_p = beta(2,2)\nmu_psi = exp(1)\nr = 0.3\nspeed = 4\n");
  const Run r = run({"solve", "--config", bad.string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("line 4") != std::string::npos);

  const fs::path kind = write("kind.conf", "mu_p = beta(2,2)\nmu_psi = exp(1)\nr = 0.3\n");
  CHECK(run({"solve", "--config", kind.string(), "--kind", "nash"}).code == kExitUsage);

  const fs::path atoms = write("atoms.conf", "atoms = [(0, 1, 0.5), (1, 1.9, 0.5)]\nr = 0.3\n");
  const Run a = run({"solve", "--config", atoms.string()});
  CHECK(a.code == kExitNumeric);
  CHECK(a.err.find("smooth_atoms") != std::string::npos);
}

TEST_CASE("lifecycle without treatment effect cannot be solved") {
  const fs::path cfg = write("flat.conf",
                             "r = 0.3\n[cohort]\nagents = 5\neps1 = 0\neps2 = 0.1\nconsumption = 1\n"
                             "diag_prob = beta(2,2)\n");
  const fs::path atoms = scratch("flat_atoms.csv");
  const Run r = run({"lifecycle", "--config", cfg.string(), "--out", atoms.string(), "--solve"});
  CHECK(r.code == kExitNumeric);
  std::ifstream in(atoms);
  const CsvTable t = read_csv(in);
  CHECK(t.header == std::vector<std::string>{"p", "psi", "weight"});
  REQUIRE_FALSE(t.rows.empty());
  for (const auto& row : t.rows) CHECK(parse_number(row[1]) == 0.0);
}

TEST_CASE("lifecycle reduces a single-period cohort file") {
  const fs::path cohort = write("people.csv",
                                "wealth,diag_prob,success,loss_fraction\n100,0.2,0.5,0.2\n50,0.7,0.9,0.5\n");
  const fs::path cfg = write("people.conf", "r = 0.3\n[cohort]\nfile = \"" + cohort.string() + "\"\n");
  const Run r = run({"lifecycle", "--config", cfg.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("0.2,40,0.5\n") != std::string::npos);
  CHECK(r.out.find("0.7,22.5,0.5\n") != std::string::npos);
}

TEST_CASE("lifecycle respects the reservation price bound") {
  const fs::path cfg = write("many.conf",
                             "r = 0.3\n[cohort]\nagents = 200\nseed = 4\nhorizon = 30\ndiscount = 0.03\n"
                             "eps1 = 0.5\neps2 = 0.2\nconsumption = uniform(1, 3)\nquality = beta(5,1)\n"
                             "survival = 0.97\ndiag_prob = beta(2,5)\n");
  const Run r = run({"lifecycle", "--config", cfg.string()});
  REQUIRE(r.code == kExitOk);
  std::istringstream in(r.out);
  const CsvTable t = read_csv(in);
  REQUIRE(t.rows.size() > 1);
  for (const auto& row : t.rows) CHECK(parse_number(row[1]) <= 0.5 / 0.2 * 3 + 1e-9);
}

TEST_CASE("oracle output is reproducible") {
  const fs::path cfg = write("oracle.conf", "mu_p = beta(2,3)\nmu_psi = exp(1)\nr = 0.3\n");
  const Run a = run({"oracle", "--config", cfg.string(), "--mc-n", "5000", "--seed", "9"});
  const Run b = run({"oracle", "--config", cfg.string(), "--mc-n", "5000", "--seed", "9"});
  const Run c = run({"oracle", "--config", cfg.string(), "--mc-n", "5000", "--seed", "10"});
  REQUIRE(a.code == kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  CHECK(a.out.find("draws=5000 seed=9") != std::string::npos);
  CHECK(run({"oracle", "--config", cfg.string(), "--mc-n", "10"}).code == kExitUsage);

  const fs::path custom = write("oracle_grid.conf", "mu_p = beta(2,3)\nmu_psi = exp(1)\nr = 0.3\n"
                                                   "[oracle]\ntheta = [1, 2]\npremium_fraction = 0.5\n");
  const Run g = run({"oracle", "--config", custom.string(), "--mc-n", "2000"});
  REQUIRE(g.code == kExitOk);
  CHECK(g.out.find("\n1,0.5,") != std::string::npos);
  CHECK(g.out.find("\n2,1,") != std::string::npos);
  CHECK(std::count(g.out.begin(), g.out.end(), '\n') == 4);

  const fs::path atoms = write("oracle_atoms.conf", "atoms = [(0.2, 1, 0.3), (0.9, 2, 0.7)]\nr = 0.3\n");
  const Run e = run({"oracle", "--config", atoms.string(), "--mc-n", "2000"});
  REQUIRE(e.code == kExitOk);
  CHECK(e.out.find("max_z=0 ") != std::string::npos);
}

TEST_CASE("sweeps keep order and report failed points") {
  const fs::path cfg = write("sweep.conf",
                             "mu_p = beta(2,2)\nmu_psi = exp(1)\nr = 0.3\n[sweep]\nparam = lambda\n"
                             "values = [3, 1, -1, 2]\n");
  const fs::path csv = scratch("sweep.csv");
  const Run r = run({"sweep", "--config", cfg.string(), "--kind", "baseline", "--out", csv.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.err.find("sweep point failed") != std::string::npos);
  std::ifstream in(csv);
  const auto rows = read_sweep_csv(in);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].param == 3);
  CHECK(rows[1].param == 1);
  CHECK(rows[2].param == -1);
  CHECK(rows[3].param == 2);
  CHECK(std::isnan(rows[2].theta));
  CHECK(rows[1].theta == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(rows[0].theta == doctest::Approx(1.0 / 3).epsilon(1e-5));

  const fs::path unknown = write("sweep_bad.conf",
                                 "mu_p = beta(2,2)\nmu_psi = exp(1)\nr = 0.3\n[sweep]\nparam = mood\nvalues = [1]\n");
  CHECK(run({"sweep", "--config", unknown.string(), "--kind", "baseline"}).code == kExitUsage);

  const fs::path json = scratch("plot.json");
  REQUIRE(run({"plotdata", csv.string(), "--param", "lambda", "--out", json.string()}).code == kExitOk);
  const auto plot = nlohmann::json::parse(slurp(json));
  CHECK(plot["parameter"] == "lambda");
  CHECK(plot["x"].size() == 4);
  CHECK(plot["locus"]["theta"].size() == 4);
  CHECK(plot["shares"]["o"].size() == 4);
  CHECK(plot["profits"]["p_p"].size() == 4);
  CHECK(run({"plotdata", scratch("missing.csv").string()}).code == kExitUsage);
}
