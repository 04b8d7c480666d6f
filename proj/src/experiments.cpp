#include "drugmarket/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "drugmarket/errors.hpp"
#include "drugmarket/line_search.hpp"

namespace drugmarket {
namespace {

const ProductForm& product_or_fail(const PopulationMeasure& m, const std::string& param) {
  if (!m.is_product()) throw DomainError("sweep over '" + param + "' needs a product population");
  return m.product_form();
}

double z_score(double quad, double mc, double se) {
  const double diff = std::fabs(quad - mc);
  if (se > 0.0) return diff / se;
  return diff <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string field;
  while (std::getline(in, field, ';')) {
    if (!field.empty()) out.push_back(parse_number(field));
  }
  return out;
}

// Per-agent value: a fixed number or a distribution sampled per agent.
struct Field {
  std::optional<double> fixed;
  std::optional<Marginal> draw;
  double sample(Rng& rng) const { return fixed ? *fixed : draw->sample_one(rng); }
};

Field field(const Config& config, const std::string& key, std::optional<double> fallback) {
  const ConfigEntry* e = config.find("cohort", key);
  if (!e) {
    if (!fallback) throw ConfigError("[cohort] is missing '" + key + "'", 0, 0);
    return {fallback, std::nullopt};
  }
  if (e->value.type == ConfigValue::Type::kNumber) return {e->value.number, std::nullopt};
  return {std::nullopt, marginal_from(e->value)};
}

}  // namespace

PopulationMeasure with_parameter(const PopulationMeasure& base, const std::string& param,
                                 double value) {
  if (param == "r") return base.with_incidence(value);
  const ProductForm& f = product_or_fail(base, param);
  const double r = base.incidence();
  if (param == "lambda") {
    return PopulationMeasure::product(f.p, Marginal::exponential(value), r);
  }
  const auto* beta = std::get_if<BetaParams>(&f.p.kind());
  if (param == "s1") {
    if (!beta) throw DomainError("sweep over s1 needs a Beta p-marginal");
    return PopulationMeasure::product(Marginal::beta(value, beta->s2), f.psi, r);
  }
  if (param == "s2") {
    if (const auto* pareto = std::get_if<ParetoParams>(&f.psi.kind())) {
      return PopulationMeasure::product(f.p, Marginal::pareto(pareto->scale, value), r);
    }
    if (!beta) throw DomainError("sweep over s2 needs a Pareto psi-marginal or a Beta p-marginal");
    return PopulationMeasure::product(Marginal::beta(beta->s1, value), f.psi, r);
  }
  throw DomainError("unknown sweep parameter '" + param + "' (expected lambda, s1, s2 or r)");
}

EquilibriumResult solve_kind(const PopulationMeasure& measure, EquilibriumKind kind,
                             const SolverOptions& options) {
  switch (kind) {
    case EquilibriumKind::kSubgamePerfect:
      return spne(measure, options);
    case EquilibriumKind::kDictatorial:
      return dictatorial(measure, options);
    case EquilibriumKind::kNoInsuranceBaseline:
      return baseline(measure, options);
  }
  throw DomainError("unknown equilibrium kind");
}

SweepOutcome run_sweep(const PopulationMeasure& base, const std::string& param,
                       const std::vector<double>& values, EquilibriumKind kind,
                       const SolverOptions& options, unsigned threads) {
  if (values.empty()) throw DomainError("sweep has no values");
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("sweep values must be finite");
  }
  // Validate the parameter name once so that a typo fails the whole sweep.
  (void)with_parameter(base, param, values.front());

  SolverOptions inner = options;
  inner.threads = 1;
  std::vector<SweepRow> rows(values.size());
  std::vector<std::string> errors(values.size());
  parallel_for(values.size(), threads, [&](std::size_t i) {
    try {
      rows[i] = sweep_row(values[i], solve_kind(with_parameter(base, param, values[i]), kind, inner));
    } catch (const std::exception& e) {
      rows[i] = failed_row(values[i]);
      errors[i] = param + "=" + format_number(values[i]) + ": " + e.what();
    }
  });
  SweepOutcome out;
  out.rows = std::move(rows);
  for (auto& e : errors) {
    if (!e.empty()) out.failures.push_back(std::move(e));
  }
  return out;
}

std::vector<PricePair> oracle_grid(const std::vector<double>& thetas, const std::vector<double>& premium_fractions) {
  std::vector<PricePair> grid;
  for (double theta : thetas) {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError("oracle prices must be positive and finite");
    for (double f : premium_fractions) {
      if (!(f >= 0.0) || !std::isfinite(f)) throw DomainError("premium fractions must be finite and >= 0");
      grid.push_back({theta, f * theta});
    }
  }
  return grid;
}

std::vector<PricePair> default_oracle_grid(const PopulationMeasure& measure) {
  const double scale = measure.psi_scale();
  std::vector<double> thetas;
  for (double tf : {0.5, 0.8, 1.1, 1.4, 1.7}) thetas.push_back(tf * scale);
  return oracle_grid(thetas, {0.2, 0.35, 0.5, 0.65, 0.8});
}

OracleReport run_oracle(const PopulationMeasure& measure, const std::vector<PricePair>& grid,
                        std::size_t n, std::uint64_t seed) {
  OracleReport report;
  std::optional<AgentSample> sample;
  if (!measure.is_atomic()) sample = draw_agents(measure, n, seed);
  for (const auto& prices : grid) {
    OraclePoint point;
    point.prices = prices;
    point.quadrature = region_masses(measure, prices);
    point.monte_carlo =
        sample ? mc_region_masses(*sample, prices) : mc_region_masses(measure, prices, n, seed);
    const RegionMasses& m = point.monte_carlo.masses;
    const RegionMasses& se = point.monte_carlo.std_errors;
    point.max_z = std::max({z_score(point.quadrature.a, m.a, se.a),
                            z_score(point.quadrature.t, m.t, se.t),
                            z_score(point.quadrature.o, m.o, se.o)});
    report.max_z = std::max(report.max_z, point.max_z);
    report.draws = point.monte_carlo.draws;
    report.points.push_back(point);
  }
  return report;
}

Cohort read_cohort_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  const auto column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < table.header.size(); ++i) {
      if (table.header[i] == name) return i;
    }
    throw DomainError("cohort CSV lacks column '" + name + "'");
  };
  Cohort cohort;
  const bool single = std::find(table.header.begin(), table.header.end(), "wealth") != table.header.end();
  if (single) {
    const std::size_t w = column("wealth"), p = column("diag_prob"), q = column("success"),
                      l = column("loss_fraction");
    for (const auto& row : table.rows) {
      if (row.size() != table.header.size()) throw DomainError("cohort CSV row has the wrong width");
      cohort.single_period.push_back(
          {parse_number(row[w]), parse_number(row[p]), parse_number(row[q]), parse_number(row[l])});
    }
    return cohort;
  }
  const std::size_t h = column("horizon"), a = column("discount"), e1 = column("eps1"),
                    e2 = column("eps2"), c = column("consumption"), q = column("quality"),
                    g = column("survival"), p = column("diag_prob");
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw DomainError("cohort CSV row has the wrong width");
    LifecycleAgent agent;
    if (!row[h].empty() && row[h] != "inf") {
      const double horizon = parse_number(row[h]);
      if (!(horizon >= 1.0) || horizon != std::floor(horizon)) {
        throw DomainError("horizon must be a whole number >= 1");
      }
      agent.horizon = static_cast<std::size_t>(horizon);
    }
    agent.discount = parse_number(row[a]);
    agent.eps1 = parse_number(row[e1]);
    agent.eps2 = parse_number(row[e2]);
    agent.consumption = parse_list(row[c]);
    agent.quality = parse_list(row[q]);
    agent.survival = parse_list(row[g]);
    agent.diag_prob = parse_list(row[p]);
    validate(agent);
    cohort.lifecycle.push_back(std::move(agent));
  }
  return cohort;
}

Cohort cohort_from(const Config& config) {
  if (const ConfigEntry* file = config.find("cohort", "file")) {
    std::ifstream in(file->value.word);
    if (!in) throw ConfigError("cannot open cohort file '" + file->value.word + "'", file->line, file->column);
    return read_cohort_csv(in);
  }
  const std::size_t n = config.count("cohort", "agents", 0);
  if (n == 0) throw ConfigError("[cohort] needs 'file' or a positive 'agents' count", 0, 0);
  Rng rng(config.count("cohort", "seed", 1));
  Cohort cohort;
  if (config.word("cohort", "model", "lifecycle") == "single") {
    const Field w = field(config, "wealth", std::nullopt), p = field(config, "diag_prob", std::nullopt),
                q = field(config, "success", 1.0), l = field(config, "loss_fraction", 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      cohort.single_period.push_back({w.sample(rng), p.sample(rng), q.sample(rng), l.sample(rng)});
    }
    return cohort;
  }
  std::optional<std::size_t> horizon;
  if (const ConfigEntry* e = config.find("cohort", "horizon"); e && std::isfinite(e->value.number)) {
    horizon = config.count("cohort", "horizon", 1);
  }
  const Field alpha = field(config, "discount", 0.0), e1 = field(config, "eps1", std::nullopt),
              e2 = field(config, "eps2", std::nullopt), c = field(config, "consumption", std::nullopt),
              q = field(config, "quality", 1.0), g = field(config, "survival", 1.0),
              p = field(config, "diag_prob", std::nullopt);
  for (std::size_t i = 0; i < n; ++i) {
    LifecycleAgent agent;
    agent.horizon = horizon;
    agent.discount = alpha.sample(rng);
    agent.eps1 = e1.sample(rng);
    agent.eps2 = e2.sample(rng);
    // Constant paths: one draw per agent, repeated over time.
    const std::size_t len = horizon ? *horizon : 1;
    agent.consumption.assign(len, c.sample(rng));
    agent.quality.assign(len, q.sample(rng));
    agent.survival.assign(len, g.sample(rng));
    agent.diag_prob.assign(len, p.sample(rng));
    validate(agent);
    cohort.lifecycle.push_back(std::move(agent));
  }
  return cohort;
}

PopulationMeasure reduce(const Cohort& cohort, std::size_t period, double incidence) {
  if (!cohort.single_period.empty()) return reduce_single_period(cohort.single_period, incidence);
  return reduce_cohort(cohort.lifecycle, period, incidence);
}

}  // namespace drugmarket
