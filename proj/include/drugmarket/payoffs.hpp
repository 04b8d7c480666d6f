#pragma once

#include "drugmarket/distributions.hpp"
#include "drugmarket/population.hpp"

namespace drugmarket {

/// Per-unit marginal costs. Both default to zero, which is the model solved
/// throughout; non-zero values shift the margins linearly.
struct MarginalCosts {
  double producer = 0.0;
  double insurer = 0.0;
};

struct ProfitPair {
  double producer = 0.0;
  double insurer = 0.0;
};

/// Producer: (theta - c_p) r (A + T). Insurer: (premium - theta r - c_i) A,
/// and 0 when the insurer stays out.
ProfitPair profits_from_masses(const RegionMasses& masses, const PricePair& prices, double incidence,
                               const MarginalCosts& costs = {});

ProfitPair profits(const PopulationMeasure& measure, const PricePair& prices,
                   const MarginalCosts& costs = {});

/// Producer profit when the insurer never enters: theta r P[psi > theta].
double no_insurer_profit(const PopulationMeasure& measure, double theta);

/// Upper bound on the producer profit at price theta for any premium in the
/// strip: theta r P[psi > theta r].
double producer_profit_upper_bound(const PopulationMeasure& measure, double theta);

/// premium in [theta r, theta]; false for the no-entry sentinel.
bool in_delta(const PricePair& prices, double incidence);

/// Partial derivative of the insurer profit in the premium at fixed theta.
double insurer_profit_premium_derivative(const PopulationMeasure& measure, const PricePair& prices,
                                         const MarginalCosts& costs = {});

}  // namespace drugmarket
