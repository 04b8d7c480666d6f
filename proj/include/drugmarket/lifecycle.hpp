#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "drugmarket/distributions.hpp"
#include "drugmarket/population.hpp"

namespace drugmarket {

/// Multi-period agent on deterministic paths. Periods are 0, 1, ...,
/// horizon - 1; without a horizon the arrays are extended by their last
/// entry.
struct LifecycleAgent {
  std::optional<std::size_t> horizon;
  std::vector<double> consumption;  // c[t] >= 0
  std::vector<double> quality;      // q[t] in (0, 1]
  std::vector<double> survival;     // gamma[t] in (0, 1]
  std::vector<double> diag_prob;    // p[t] in [0, 1]
  double discount = 0.0;            // alpha >= 0
  double eps1 = 0.0;                // treatment effect on quality, >= 0
  double eps2 = 0.0;                // survival improvement, > 0 unless the horizon is finite
};

/// One-period agent: wealth, diagnosis probability, treatment success
/// probability and fraction of wealth lost when untreated.
struct SinglePeriodAgent {
  double wealth = 0.0;
  double diag_prob = 0.0;
  double success = 0.0;
  double loss_fraction = 0.0;
};

/// Throws DomainError when fields are out of range or arrays are too short.
void validate(const LifecycleAgent& agent);

/// prod_{l=s..t} q_l gamma_l / (1 + alpha)^(t - s).
double utility_weight(const LifecycleAgent& agent, std::size_t s, std::size_t t);

/// Partial sum of the reservation price over k = 1..terms (clipped at the
/// horizon). Exposed so that truncation can be checked.
double reservation_price_terms(const LifecycleAgent& agent, std::size_t t, std::size_t terms);

/// Number of terms after which the geometric tail is below 1e-10 max(c).
std::size_t reservation_price_cutoff(const LifecycleAgent& agent, std::size_t t);

/// psi(t) = sum_k w(t, t+k) c[t+k] eps1 (1 + eps2)^-k.
double reservation_price(const LifecycleAgent& agent, std::size_t t);

struct Decision {
  Choice choice = Choice::kNoAccess;
  bool on_boundary = false;
};

/// Insure iff premium <= p_t min(psi(t), theta); otherwise treat iff
/// psi(t) >= theta. Ties go to the earlier option here, unlike classify().
Decision decide(const LifecycleAgent& agent, std::size_t t, double theta, double premium);
Decision decide(double p, double psi, double theta, double premium);

/// Equal-weight planar atoms at (p_t, psi(t)); coincident points merge.
PopulationMeasure reduce_cohort(const std::vector<LifecycleAgent>& agents, std::size_t t,
                                double incidence);

double single_period_psi(const SinglePeriodAgent& agent);

PopulationMeasure reduce_single_period(const std::vector<SinglePeriodAgent>& agents, double incidence);

/// Merges planar atoms whose coordinates agree within `tol`.
std::vector<PlanarAtom> merge_atoms(std::vector<PlanarAtom> atoms, double tol = 1e-12);

}  // namespace drugmarket
