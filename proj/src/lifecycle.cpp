#include "drugmarket/lifecycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "drugmarket/errors.hpp"

namespace drugmarket {
namespace {

double at(const std::vector<double>& values, std::size_t i) {
  return i < values.size() ? values[i] : values.back();
}

bool in_horizon(const LifecycleAgent& agent, std::size_t t) {
  return !agent.horizon || t < *agent.horizon;
}

double max_consumption(const LifecycleAgent& agent) {
  const std::size_t n = agent.horizon ? std::min(*agent.horizon, agent.consumption.size())
                                      : agent.consumption.size();
  return *std::max_element(agent.consumption.begin(), agent.consumption.begin() + n);
}

void check_array(const std::vector<double>& values, const char* name, const LifecycleAgent& agent,
                 double lo, double hi, bool open_lo) {
  if (values.empty()) throw DomainError(std::string(name) + " is empty");
  if (agent.horizon && values.size() < *agent.horizon) {
    throw DomainError(std::string(name) + " is shorter than the horizon");
  }
  for (double v : values) {
    const bool low_ok = open_lo ? v > lo : v >= lo;
    if (!low_ok || !(v <= hi)) throw DomainError(std::string(name) + " entry out of range");
  }
}

}  // namespace

void validate(const LifecycleAgent& agent) {
  if (agent.horizon && *agent.horizon == 0) throw DomainError("horizon must be at least 1");
  const double inf = std::numeric_limits<double>::infinity();
  check_array(agent.consumption, "consumption", agent, 0.0, inf, false);
  check_array(agent.quality, "quality", agent, 0.0, 1.0, true);
  check_array(agent.survival, "survival", agent, 0.0, 1.0, true);
  check_array(agent.diag_prob, "diag_prob", agent, 0.0, 1.0, false);
  for (double c : agent.consumption) {
    if (!std::isfinite(c)) throw DomainError("consumption must be finite");
  }
  if (!(agent.discount >= 0.0) || !std::isfinite(agent.discount)) {
    throw DomainError("discount must be finite and >= 0");
  }
  if (!(agent.eps1 >= 0.0) || !std::isfinite(agent.eps1)) throw DomainError("eps1 must be >= 0");
  if (!(agent.eps2 >= 0.0) || !std::isfinite(agent.eps2)) throw DomainError("eps2 must be >= 0");
  if (!agent.horizon && agent.eps2 == 0.0) {
    throw DomainError("eps2 = 0 needs a finite horizon: the reservation price series diverges");
  }
}

double utility_weight(const LifecycleAgent& agent, std::size_t s, std::size_t t) {
  if (s > t || !in_horizon(agent, t)) throw DomainError("utility_weight: need s <= t < horizon");
  double w = 1.0;
  for (std::size_t l = s; l <= t; ++l) w *= at(agent.quality, l) * at(agent.survival, l);
  return w / std::pow(1.0 + agent.discount, static_cast<double>(t - s));
}

double reservation_price_terms(const LifecycleAgent& agent, std::size_t t, std::size_t terms) {
  if (!in_horizon(agent, t)) throw DomainError("reservation_price: t beyond the horizon");
  if (agent.horizon) terms = std::min(terms, *agent.horizon - 1 - t);
  // Running product keeps this linear in the number of terms.
  double weight = at(agent.quality, t) * at(agent.survival, t);
  const double step = 1.0 / ((1.0 + agent.discount) * (1.0 + agent.eps2));
  double factor = 1.0;
  double sum = 0.0;
  for (std::size_t k = 1; k <= terms; ++k) {
    weight *= at(agent.quality, t + k) * at(agent.survival, t + k);
    factor *= step;
    sum += weight * factor * at(agent.consumption, t + k);
  }
  return agent.eps1 * sum;
}

std::size_t reservation_price_cutoff(const LifecycleAgent& agent, std::size_t t) {
  const std::size_t cap = agent.horizon ? *agent.horizon - 1 - t : std::size_t(-1);
  if (agent.eps1 == 0.0 || agent.eps2 == 0.0) return cap;
  // eps1 (1+eps2)^-K / eps2 < 1e-10, the tail bound divided by max(c).
  const double k = std::log(agent.eps1 / (agent.eps2 * 1e-10)) / std::log1p(agent.eps2);
  const std::size_t needed = k <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(k)) + 1;
  return std::min(needed, cap);
}

double reservation_price(const LifecycleAgent& agent, std::size_t t) {
  validate(agent);
  if (agent.eps1 == 0.0 || max_consumption(agent) == 0.0) return 0.0;
  return reservation_price_terms(agent, t, reservation_price_cutoff(agent, t));
}

Decision decide(double p, double psi, double theta, double premium) {
  Decision d;
  const double cap = p * std::min(psi, theta);
  if (premium <= cap) {
    d.choice = Choice::kInsure;
    d.on_boundary = premium == cap;
    return d;
  }
  d.choice = psi >= theta ? Choice::kTreat : Choice::kNoAccess;
  d.on_boundary = psi == theta;
  return d;
}

Decision decide(const LifecycleAgent& agent, std::size_t t, double theta, double premium) {
  const double psi = reservation_price(agent, t);
  return decide(at(agent.diag_prob, t), psi, theta, premium);
}

std::vector<PlanarAtom> merge_atoms(std::vector<PlanarAtom> atoms, double tol) {
  std::sort(atoms.begin(), atoms.end(), [](const PlanarAtom& a, const PlanarAtom& b) {
    return a.p != b.p ? a.p < b.p : a.psi < b.psi;
  });
  std::vector<PlanarAtom> out;
  for (const auto& a : atoms) {
    auto hit = std::find_if(out.rbegin(), out.rend(), [&](const PlanarAtom& b) {
      return std::fabs(a.p - b.p) <= tol && std::fabs(a.psi - b.psi) <= tol;
    });
    if (hit != out.rend()) {
      hit->weight += a.weight;
    } else {
      out.push_back(a);
    }
  }
  return out;
}

PopulationMeasure reduce_cohort(const std::vector<LifecycleAgent>& agents, std::size_t t,
                                double incidence) {
  if (agents.empty()) throw DomainError("cohort is empty");
  std::vector<PlanarAtom> atoms(agents.size());
  const double w = 1.0 / static_cast<double>(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    atoms[i] = {at(agents[i].diag_prob, t), reservation_price(agents[i], t), w};
  }
  return PopulationMeasure::atoms(merge_atoms(std::move(atoms)), incidence);
}

double single_period_psi(const SinglePeriodAgent& agent) {
  if (!(agent.wealth >= 0.0) || !(agent.success >= 0.0 && agent.success <= 1.0) ||
      !(agent.loss_fraction >= 0.0 && agent.loss_fraction <= 1.0) ||
      !(agent.diag_prob >= 0.0 && agent.diag_prob <= 1.0)) {
    throw DomainError("single-period agent field out of range");
  }
  return agent.wealth * agent.success * (1.0 - agent.loss_fraction);
}

PopulationMeasure reduce_single_period(const std::vector<SinglePeriodAgent>& agents, double incidence) {
  if (agents.empty()) throw DomainError("cohort is empty");
  std::vector<PlanarAtom> atoms;
  const double w = 1.0 / static_cast<double>(agents.size());
  for (const auto& a : agents) atoms.push_back({a.diag_prob, single_period_psi(a), w});
  return PopulationMeasure::atoms(merge_atoms(std::move(atoms)), incidence);
}

}  // namespace drugmarket
