#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "drugmarket/distributions.hpp"

namespace drugmarket {

/// Treatment price chosen by the producer and premium chosen by the insurer.
/// A premium of +infinity is the "insurer does not enter" sentinel.
struct PricePair {
  static constexpr double kNoEntry = std::numeric_limits<double>::infinity();

  double theta = 0.0;
  double premium = kNoEntry;

  static PricePair no_entry(double theta) { return {theta, kNoEntry}; }
  bool insurer_enters() const { return premium != kNoEntry; }
};

enum class Choice {
  kInsure,    // A: buy insurance at time 0
  kTreat,     // T: pay the treatment out of pocket upon diagnosis
  kNoAccess,  // O: neither
};

char choice_code(Choice c);

/// Fractions of the population in regions A, T and O.
struct RegionMasses {
  double a = 0.0;
  double t = 0.0;
  double o = 0.0;

  double treated() const { return a + t; }
};

/// Decision of a single agent. Indifference resolves toward O, then T.
Choice classify(double p, double psi, const PricePair& prices);

/// True when the agent sits exactly on a boundary between two regions.
bool on_region_boundary(double p, double psi, const PricePair& prices);

/// Region masses under `measure`. Exact for atoms and uniform patches,
/// adaptive quadrature for product densities. Quadrature failures surface as
/// NumericError.
RegionMasses region_masses(const PopulationMeasure& measure, const PricePair& prices);

/// Number of planar atoms (0 for other forms) lying on a decision boundary.
std::size_t boundary_atom_count(const PopulationMeasure& measure, const PricePair& prices);

/// Sensitivity of the insured mass to the premium, d𝒜/dπ̃ at fixed theta.
/// Semi-analytic for product densities (boundary term plus an integral of the
/// psi-density); central differences otherwise.
double insured_mass_premium_derivative(const PopulationMeasure& measure, const PricePair& prices);

struct MonteCarloMasses {
  RegionMasses masses;
  RegionMasses std_errors;
  std::size_t draws = 0;
};

/// Draws of (p, psi) reused across many price pairs.
struct AgentSample {
  std::vector<double> p;
  std::vector<double> psi;
};

AgentSample draw_agents(const PopulationMeasure& measure, std::size_t n, std::uint64_t seed);

/// Empirical region fractions over a fixed sample with binomial standard errors.
MonteCarloMasses mc_region_masses(const AgentSample& sample, const PricePair& prices);

/// Monte Carlo oracle for region_masses. For planar-atom populations the
/// weighted enumeration is exact and is returned with zero standard errors.
MonteCarloMasses mc_region_masses(const PopulationMeasure& measure, const PricePair& prices,
                                  std::size_t n, std::uint64_t seed);

}  // namespace drugmarket
