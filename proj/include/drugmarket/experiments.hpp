#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "drugmarket/config.hpp"
#include "drugmarket/lifecycle.hpp"
#include "drugmarket/report.hpp"
#include "drugmarket/solver.hpp"

namespace drugmarket {

/// Swept parameter: lambda (exponential rate of psi), s1 (first Beta shape of
/// p), s2 (Pareto shape of psi, else second Beta shape of p) or r.
PopulationMeasure with_parameter(const PopulationMeasure& base, const std::string& param,
                                 double value);

EquilibriumResult solve_kind(const PopulationMeasure& measure, EquilibriumKind kind,
                             const SolverOptions& options);

struct SweepOutcome {
  std::vector<SweepRow> rows;
  std::vector<std::string> failures;  // one message per failed point, in input order
};

/// Independent solves over `values`, run `threads` at a time; rows come back
/// in input order. A failing point yields a NaN row, not an exception.
SweepOutcome run_sweep(const PopulationMeasure& base, const std::string& param,
                       const std::vector<double>& values, EquilibriumKind kind,
                       const SolverOptions& options, unsigned threads);

struct OraclePoint {
  PricePair prices;
  RegionMasses quadrature;
  MonteCarloMasses monte_carlo;
  double max_z = 0.0;  // largest |quadrature - MC| / SE over the three regions
};

struct OracleReport {
  std::vector<OraclePoint> points;
  double max_z = 0.0;
  std::size_t draws = 0;
};

/// 5 x 5 grid: theta at {0.5, 0.8, 1.1, 1.4, 1.7} times the psi scale and the
/// premium at {0.2, 0.35, 0.5, 0.65, 0.8} times theta.
std::vector<PricePair> default_oracle_grid(const PopulationMeasure& measure);
/// Every theta paired with each premium fraction of it.
std::vector<PricePair> oracle_grid(const std::vector<double>& thetas, const std::vector<double>& premium_fractions);

/// One shared sample of n agents scored against every price pair.
OracleReport run_oracle(const PopulationMeasure& measure, const std::vector<PricePair>& grid,
                        std::size_t n, std::uint64_t seed);

/// Cohort CSV with either lifecycle columns
/// (horizon,discount,eps1,eps2,consumption,quality,survival,diag_prob; arrays
/// separated by ';', empty or "inf" horizon meaning unbounded) or single-period
/// columns (wealth,diag_prob,success,loss_fraction).
struct Cohort {
  std::vector<LifecycleAgent> lifecycle;
  std::vector<SinglePeriodAgent> single_period;
};
Cohort read_cohort_csv(std::istream& in);
/// Cohort drawn from a [cohort] section; each scalar field is a number or a
/// distribution sampled once per agent.
Cohort cohort_from(const Config& config);
PopulationMeasure reduce(const Cohort& cohort, std::size_t period, double incidence);

}  // namespace drugmarket
