#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "drugmarket/distributions.hpp"
#include "drugmarket/payoffs.hpp"
#include "drugmarket/population.hpp"

namespace drugmarket {

enum class EquilibriumKind { kSubgamePerfect, kDictatorial, kNoInsuranceBaseline };

std::string kind_name(EquilibriumKind kind);
EquilibriumKind parse_kind(const std::string& name);

struct SolverOptions {
  /// Coarse grid over the premium strip [theta r, theta].
  std::size_t premium_grid = 512;
  /// Coarse grid over treatment prices.
  std::size_t price_grid = 512;
  /// Number of best coarse-grid brackets refined by golden section.
  std::size_t refine_brackets = 5;
  /// Golden-section stopping widths, relative to theta.
  double premium_tol = 1e-10;
  double price_tol = 1e-10;
  /// Upper end of the price search; 0 selects it from the psi-marginal.
  double theta_max = 0.0;
  /// Tail mass of psi ignored when choosing theta_max automatically.
  double tail_mass = 1e-6;
  double participation_tol = 1e-9;
  /// Workers for the coarse price grid. Results do not depend on this.
  unsigned threads = 1;
};

struct BestResponse {
  double premium = PricePair::kNoEntry;
  double insurer_profit = 0.0;
  bool is_interior = false;
  double stationarity_residual = 0.0;

  bool enters() const { return premium != PricePair::kNoEntry; }
};

/// A locally optimal point that took part in the final selection.
struct Candidate {
  double theta = 0.0;
  double premium = PricePair::kNoEntry;
  ProfitPair profits;
};

struct SearchDiagnostics {
  double theta_min = 0.0;
  double theta_max = 0.0;
  bool log_spaced = false;
  std::size_t price_grid = 0;
  std::size_t premium_grid = 0;
  std::size_t refinement_evaluations = 0;
  /// |dP_i/dpremium| at the reported premium (0 on the strip boundary).
  double stationarity_residual = 0.0;
  /// Largest producer-profit bound theta r P[psi > theta r] beyond theta_max.
  double tail_bound = 0.0;
  /// False when the truncated search cannot be proven to contain the optimum
  /// (infinite psi-mean, or tail_bound above the incumbent).
  bool certified = true;
  /// Producer profit without insurer, for dictatorial and comparison runs.
  double baseline_profit = 0.0;
  bool monotonicity_fallback = false;
  std::vector<std::string> warnings;
};

struct EquilibriumResult {
  EquilibriumKind kind = EquilibriumKind::kSubgamePerfect;
  double theta = 0.0;
  double premium = PricePair::kNoEntry;
  RegionMasses masses;
  ProfitPair profits;
  std::vector<Candidate> candidates;
  SearchDiagnostics diagnostics;
};

struct ComparisonReport {
  EquilibriumResult baseline;
  EquilibriumResult with_insurer;
  /// theta* - theta_baseline.
  double price_effect = 0.0;
  /// (A* + T*) - T_baseline.
  double access_effect = 0.0;
  double producer_gain = 0.0;
  double insurer_profit = 0.0;
};

struct KPrimePoint {
  double theta = 0.0;
  double premium = PricePair::kNoEntry;
  ProfitPair profits;
};

/// Insurer's global best response on [theta r, theta]: coarse grid, golden
/// refinement of every bracket where the profit stops increasing, and both
/// endpoints. NoEntry when no premium yields a positive profit.
BestResponse best_response(const PopulationMeasure& measure, double theta,
                           const SolverOptions& options = {});

/// Producer-optimal subgame-perfect equilibrium. Requires a density.
EquilibriumResult spne(const PopulationMeasure& measure, const SolverOptions& options = {});

/// Insurer-optimal equilibrium subject to producer participation.
EquilibriumResult dictatorial(const PopulationMeasure& measure, const SolverOptions& options = {});

/// Producer optimum when the insurer never enters.
EquilibriumResult baseline(const PopulationMeasure& measure, const SolverOptions& options = {});

ComparisonReport compare(const PopulationMeasure& measure, const SolverOptions& options = {});

/// Best responses along theta_grid, keeping the points where the producer
/// does at least as well as without an insurer.
std::vector<KPrimePoint> kprime_scan(const PopulationMeasure& measure,
                                     const std::vector<double>& theta_grid,
                                     const SolverOptions& options = {});

/// Price range searched by the solvers: [theta_min, theta_max] and spacing.
struct PriceDomain {
  double lo = 0.0;
  double hi = 0.0;
  bool log_spaced = false;
};
PriceDomain price_domain(const PopulationMeasure& measure, const SolverOptions& options = {});

}  // namespace drugmarket
