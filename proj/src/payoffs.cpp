#include "drugmarket/payoffs.hpp"

#include <cmath>

#include "drugmarket/errors.hpp"

namespace drugmarket {

ProfitPair profits_from_masses(const RegionMasses& masses, const PricePair& prices, double incidence,
                               const MarginalCosts& costs) {
  ProfitPair out;
  out.producer = (prices.theta - costs.producer) * incidence * masses.treated();
  if (prices.insurer_enters()) {
    out.insurer = (prices.premium - prices.theta * incidence - costs.insurer) * masses.a;
  }
  return out;
}

ProfitPair profits(const PopulationMeasure& measure, const PricePair& prices,
                   const MarginalCosts& costs) {
  return profits_from_masses(region_masses(measure, prices), prices, measure.incidence(), costs);
}

double no_insurer_profit(const PopulationMeasure& measure, double theta) {
  if (!(theta >= 0.0)) throw DomainError("treatment price must be >= 0");
  if (theta == 0.0) return 0.0;
  return theta * measure.incidence() * measure.psi_survival(theta);
}

double producer_profit_upper_bound(const PopulationMeasure& measure, double theta) {
  const double r = measure.incidence();
  return no_insurer_profit(measure, theta * r) / r;
}

bool in_delta(const PricePair& prices, double incidence) {
  if (!prices.insurer_enters()) return false;
  return prices.premium >= prices.theta * incidence && prices.premium <= prices.theta;
}

double insurer_profit_premium_derivative(const PopulationMeasure& measure, const PricePair& prices,
                                         const MarginalCosts& costs) {
  if (!prices.insurer_enters()) return 0.0;
  const double a = region_masses(measure, prices).a;
  const double margin = prices.premium - prices.theta * measure.incidence() - costs.insurer;
  return a + margin * insured_mass_premium_derivative(measure, prices);
}

}  // namespace drugmarket
