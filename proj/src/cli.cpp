#include "drugmarket/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "drugmarket/config.hpp"
#include "drugmarket/errors.hpp"
#include "drugmarket/experiments.hpp"
#include "drugmarket/report.hpp"

namespace drugmarket {
namespace {

struct Flags {
  std::string config;
  std::string kind;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string out;
  std::size_t grid = 0;
  std::size_t mc_n = 1000000;
  bool solve = false;
  double radius = 0.0;
  bool compare = false;
  std::string sweep_file;
  std::string param = "param";
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream file(path);
  if (!file) throw ConfigError("cannot write '" + path + "'", 0, 0);
  file << text;
}

// Writes to `path`, or to `out` when no path was given.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_file(path, text);
  }
}

SolverOptions options_for(const Config& config, const Flags& flags) {
  SolverOptions options = solver_options_from(config);
  if (flags.grid > 0) {
    options.premium_grid = flags.grid;
    options.price_grid = flags.grid;
  }
  return options;
}

EquilibriumKind kind_for(const Config& config, const Flags& flags) {
  return parse_kind(flags.kind.empty() ? config.word("solver", "kind", "spne") : flags.kind);
}

unsigned sweep_threads(const Config& config) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(config.count("solver", "threads", hw));
}

int cmd_solve(const Flags& flags, std::ostream& out) {
  const Config config = Config::load(flags.config);
  const PopulationMeasure measure = population_from(config);
  const SolverOptions options = options_for(config, flags);
  const EquilibriumKind kind = kind_for(config, flags);
  if (flags.compare) {
    const ComparisonReport report = compare(measure, options);
    out << result_summary(report.baseline) << result_summary(report.with_insurer);
    out << "price_effect=" << format_number(report.price_effect)
        << " access_effect=" << format_number(report.access_effect)
        << " producer_gain=" << format_number(report.producer_gain) << '\n';
    if (!flags.out.empty()) write_file(flags.out + ".json", comparison_json(report) + "\n");
    return kExitOk;
  }
  const EquilibriumResult result = solve_kind(measure, kind, options);
  out << result_summary(result);
  if (!flags.out.empty()) {
    write_file(flags.out + ".json", result_json(result) + "\n");
    write_file(flags.out + ".csv", std::string(kResultHeader) + "\n" + result_csv_row(result) + "\n");
  }
  return kExitOk;
}

int cmd_sweep(const Flags& flags, std::ostream& out, std::ostream& err) {
  const Config config = Config::load(flags.config);
  const PopulationMeasure base = population_from(config);
  const ConfigEntry* param = config.find("sweep", "param");
  if (!param) throw ConfigError("[sweep] needs 'param'", 0, 0);
  const std::vector<double> values = config.numbers("sweep", "values");
  if (values.empty()) throw ConfigError("[sweep] needs a nonempty 'values' list", param->line, param->column);
  const SweepOutcome outcome = run_sweep(base, config.word("sweep", "param", ""), values,
                                         kind_for(config, flags), options_for(config, flags),
                                         sweep_threads(config));
  for (const auto& failure : outcome.failures) err << "sweep point failed: " << failure << '\n';
  std::ostringstream csv;
  write_sweep_csv(csv, outcome.rows);
  emit(flags.out, csv.str(), out);
  return kExitOk;
}

int cmd_oracle(const Flags& flags, std::ostream& out) {
  const Config config = Config::load(flags.config);
  const PopulationMeasure measure = population_from(config);
  const std::uint64_t seed = flags.seed_set ? flags.seed : config.count("oracle", "seed", 1);
  const std::size_t n = config.find("oracle", "n") ? config.count("oracle", "n", 0) : flags.mc_n;
  if (n < 1000) throw DomainError("Monte Carlo oracle needs at least 1000 draws");
  std::vector<PricePair> grid = default_oracle_grid(measure);
  if (config.find("oracle", "theta") || config.find("oracle", "premium_fraction")) {
    std::vector<double> thetas = config.numbers("oracle", "theta");
    std::vector<double> fractions = config.numbers("oracle", "premium_fraction");
    if (thetas.empty()) {
      for (std::size_t i = 0; i < grid.size(); i += 5) thetas.push_back(grid[i].theta);
    }
    if (fractions.empty()) fractions = {0.2, 0.35, 0.5, 0.65, 0.8};
    grid = oracle_grid(thetas, fractions);
  }
  const OracleReport report = run_oracle(measure, grid, n, seed);
  std::ostringstream csv;
  csv << "theta,premium,a_quad,t_quad,o_quad,a_mc,t_mc,o_mc,a_se,t_se,o_se,max_z\n";
  for (const auto& p : report.points) {
    const auto& m = p.monte_carlo.masses;
    const auto& se = p.monte_carlo.std_errors;
    for (double x : {p.prices.theta, p.prices.premium, p.quadrature.a, p.quadrature.t,
                     p.quadrature.o, m.a, m.t, m.o, se.a, se.t, se.o}) {
      csv << format_number(x) << ',';
    }
    csv << format_number(p.max_z) << '\n';
  }
  emit(flags.out, csv.str(), out);
  out << "draws=" << report.draws << " seed=" << seed << " max_z=" << format_number(report.max_z)
      << (report.max_z <= 3.0 ? " within 3 standard errors" : " exceeds 3 standard errors") << '\n';
  return kExitOk;
}

double median_psi(const PopulationMeasure& atoms) {
  std::vector<std::pair<double, double>> psi;
  for (const auto& a : atoms.planar_atoms()) psi.emplace_back(a.psi, a.weight);
  std::sort(psi.begin(), psi.end());
  double acc = 0.0;
  for (const auto& [x, w] : psi) {
    acc += w;
    if (acc >= 0.5) return x;
  }
  return psi.back().first;
}

int cmd_lifecycle(const Flags& flags, std::ostream& out) {
  const Config config = Config::load(flags.config);
  const std::string section = config.has_section("population") ? "population" : "";
  const ConfigEntry* r = config.find(section, "r");
  if (!r) throw ConfigError("missing incidence rate 'r'", 0, 0);
  const Cohort cohort = cohort_from(config);
  const std::size_t period = config.count("cohort", "period", 0);
  const PopulationMeasure atoms = reduce(cohort, period, r->value.number);

  std::ostringstream csv;
  csv << "p,psi,weight\n";
  for (const auto& a : atoms.planar_atoms()) {
    csv << format_number(a.p) << ',' << format_number(a.psi) << ',' << format_number(a.weight) << '\n';
  }
  emit(flags.out, csv.str(), out);
  if (!flags.solve) return kExitOk;

  if (!(atoms.profit_potential() > 0.0)) {
    throw PreconditionError("no profit potential: every agent in the cohort has psi = 0");
  }
  const double radius = flags.radius > 0.0 ? flags.radius : 1e-3 * median_psi(atoms);
  const EquilibriumResult result = spne(smooth_atoms(atoms, radius), options_for(config, flags));
  out << result_summary(result);
  return kExitOk;
}

int cmd_plotdata(const Flags& flags, std::ostream& out) {
  std::ifstream in(flags.sweep_file);
  if (!in) throw ConfigError("cannot open sweep file '" + flags.sweep_file + "'", 0, 0);
  emit(flags.out, plot_json(read_sweep_csv(in), flags.param) + "\n", out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Producer, insurer and population drug-pricing game solver"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Configuration file")->required();
    sub->add_option("--out", flags.out, "Output path");
    sub->add_option("--grid", flags.grid, "Coarse grid size for prices and premiums");
  };
  CLI::App* solve = app.add_subcommand("solve", "Solve one equilibrium");
  add_common(solve);
  solve->add_option("--kind", flags.kind, "spne, dictatorial or baseline");
  solve->add_flag("--compare", flags.compare, "Compare the subgame-perfect solution with the baseline");

  CLI::App* sweep = app.add_subcommand("sweep", "Solve over a list of parameter values");
  add_common(sweep);
  sweep->add_option("--kind", flags.kind, "spne, dictatorial or baseline");

  CLI::App* oracle = app.add_subcommand("oracle", "Check region masses against Monte Carlo");
  add_common(oracle);
  oracle->add_option("--seed", flags.seed, "Random seed")->each([&](const std::string&) { flags.seed_set = true; });
  oracle->add_option("--mc-n", flags.mc_n, "Monte Carlo sample size");

  CLI::App* lifecycle = app.add_subcommand("lifecycle", "Reduce a cohort to (p, psi) atoms");
  add_common(lifecycle);
  lifecycle->add_flag("--solve", flags.solve, "Smooth the atoms and solve the game");
  lifecycle->add_option("--radius", flags.radius, "Smoothing radius (default 1e-3 times the median psi)");

  CLI::App* plotdata = app.add_subcommand("plotdata", "Plot series from a sweep CSV");
  plotdata->add_option("sweep", flags.sweep_file, "Sweep CSV file")->required();
  plotdata->add_option("--out", flags.out, "Output path");
  plotdata->add_option("--param", flags.param, "Name of the swept parameter");

  std::vector<std::string> argv_storage{"drugmarket"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(flags, out);
    if (sweep->parsed()) return cmd_sweep(flags, out, err);
    if (oracle->parsed()) return cmd_oracle(flags, out);
    if (lifecycle->parsed()) return cmd_lifecycle(flags, out);
    return cmd_plotdata(flags, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const PreconditionError& e) {
    err << "cannot solve: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << " (error estimate " << e.error_estimate() << ")\n";
    return kExitNumeric;
  }
}

}  // namespace drugmarket
