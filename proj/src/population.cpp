#include "drugmarket/population.hpp"

#include <algorithm>
#include <cmath>

#include "drugmarket/errors.hpp"
#include "drugmarket/quadrature.hpp"

namespace drugmarket {
namespace {

constexpr double kQuadTol = 1e-9;

RegionMasses finish(double a, double t) {
  a = std::clamp(a, 0.0, 1.0);
  t = std::clamp(t, 0.0, 1.0);
  return {a, t, std::max(0.0, 1.0 - a - t)};
}

void check_prices(const PricePair& prices) {
  if (!(prices.theta >= 0.0) || !std::isfinite(prices.theta)) {
    throw DomainError("treatment price must be finite and >= 0");
  }
  if (!(prices.premium >= 0.0)) throw DomainError("premium must be >= 0");
}

// Integrates f over [lo, hi] splitting at the given interior points.
double integrate_split(const std::function<double(double)>& f, double lo, double hi,
                       std::vector<double> cuts) {
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(),
                            [&](double x) { return !(x > lo && x < hi); }),
             cuts.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.insert(cuts.begin(), lo);
  cuts.push_back(hi);
  const QuadratureOptions options{kQuadTol / static_cast<double>(cuts.size()), 0.0, 20};
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += integrate(f, cuts[i], cuts[i + 1], options).value;
  }
  return total;
}

// Interior points where p -> S_psi(premium / p) f_p(p) is not smooth.
std::vector<double> insured_integrand_cuts(const ProductForm& form, double premium) {
  std::vector<double> cuts = form.p.breakpoints();
  for (double k : form.psi.breakpoints()) {
    if (k > 0.0) cuts.push_back(premium / k);
  }
  return cuts;
}

// Mass of A = {p > premium/theta, p psi > premium} for 0 <= premium < theta.
double product_insured_mass(const ProductForm& form, double theta, double premium) {
  const double c = premium / theta;
  if (form.p.is_atomic()) {
    double acc = 0.0;
    for (const auto& atom : std::get<std::vector<Atom>>(form.p.kind())) {
      if (atom.location > c) acc += atom.weight * form.psi.survival(premium / atom.location);
    }
    return acc;
  }
  if (form.psi.is_atomic()) {
    double acc = 0.0;
    for (const auto& atom : std::get<std::vector<Atom>>(form.psi.kind())) {
      if (atom.location > 0.0) acc += atom.weight * form.p.survival(std::max(c, premium / atom.location));
    }
    return acc;
  }
  if (premium == 0.0) return form.p.survival(0.0) * form.psi.survival(0.0);
  const double lo = std::max(c, form.p.support_lower());
  const double hi = std::min(1.0, form.p.support_upper());
  if (!(lo < hi)) return 0.0;
  const auto integrand = [&](double p) { return form.psi.survival(premium / p) * form.p.density(p); };
  return integrate_split(integrand, lo, hi, insured_integrand_cuts(form, premium));
}

double patch_p_fraction_at_most(const UniformPatch& q, double c) {
  if (c <= q.p_lo) return 0.0;
  if (c >= q.p_hi) return 1.0;
  return (c - q.p_lo) / (q.p_hi - q.p_lo);
}

double patch_psi_fraction_above(const UniformPatch& q, double x) {
  if (x <= q.psi_lo) return 1.0;
  if (x >= q.psi_hi) return 0.0;
  return (q.psi_hi - x) / (q.psi_hi - q.psi_lo);
}

// Fraction of a uniform patch inside A, by integrating the psi-length of
// {psi > premium / p} over p in closed form.
double patch_insured_fraction(const UniformPatch& q, double theta, double premium) {
  const double c = premium / theta;
  const double a = std::max(q.p_lo, c);
  const double b = q.p_hi;
  if (!(a < b)) return 0.0;
  const double width = q.p_hi - q.p_lo;
  const double height = q.psi_hi - q.psi_lo;
  if (premium == 0.0) return (b - a) / width;
  const double p_full_below = premium / q.psi_hi;  // g(p) = 0 for p <= this
  const double p_full_above = q.psi_lo > 0.0 ? premium / q.psi_lo : 0.0;
  double integral = 0.0;
  const double u = std::max(a, p_full_below);
  const double v = q.psi_lo > 0.0 ? std::min(b, p_full_above) : b;
  if (u < v) integral += q.psi_hi * (v - u) - premium * std::log(v / u);
  if (q.psi_lo > 0.0) {
    const double w = std::max(a, p_full_above);
    if (w < b) integral += height * (b - w);
  }
  return std::clamp(integral / (width * height), 0.0, 1.0);
}

double mass_a(const PopulationMeasure& measure, double theta, double premium) {
  if (!(premium < theta)) return 0.0;
  if (measure.is_product()) return product_insured_mass(measure.product_form(), theta, premium);
  if (measure.is_patches()) {
    double acc = 0.0;
    for (const auto& q : measure.uniform_patches()) {
      acc += q.weight * patch_insured_fraction(q, theta, premium);
    }
    return acc;
  }
  double acc = 0.0;
  const PricePair prices{theta, premium};
  for (const auto& atom : measure.planar_atoms()) {
    if (classify(atom.p, atom.psi, prices) == Choice::kInsure) acc += atom.weight;
  }
  return acc;
}

}  // namespace

char choice_code(Choice c) {
  switch (c) {
    case Choice::kInsure:
      return 'A';
    case Choice::kTreat:
      return 'T';
    case Choice::kNoAccess:
      return 'O';
  }
  return '?';
}

Choice classify(double p, double psi, const PricePair& prices) {
  const double theta = prices.theta;
  const double premium = prices.premium;
  if (p * theta > premium && p * psi > premium) return Choice::kInsure;
  if (psi > theta && p * theta <= premium) return Choice::kTreat;
  return Choice::kNoAccess;
}

bool on_region_boundary(double p, double psi, const PricePair& prices) {
  if (psi == prices.theta) return true;
  if (!prices.insurer_enters()) return false;
  return p * prices.theta == prices.premium || p * psi == prices.premium;
}

RegionMasses region_masses(const PopulationMeasure& measure, const PricePair& prices) {
  check_prices(prices);
  const double theta = prices.theta;
  const double premium = prices.premium;

  if (measure.is_atomic()) {
    double a = 0.0;
    double t = 0.0;
    for (const auto& atom : measure.planar_atoms()) {
      switch (classify(atom.p, atom.psi, prices)) {
        case Choice::kInsure:
          a += atom.weight;
          break;
        case Choice::kTreat:
          t += atom.weight;
          break;
        case Choice::kNoAccess:
          break;
      }
    }
    return finish(a, t);
  }

  if (!(premium < theta)) return finish(0.0, measure.psi_survival(theta));

  // 0 <= premium < theta, so theta > 0.
  const double c = premium / theta;
  double t = 0.0;
  if (measure.is_product()) {
    const auto& form = measure.product_form();
    t = form.psi.survival(theta) * form.p.cdf(c);
  } else {
    for (const auto& q : measure.uniform_patches()) {
      t += q.weight * patch_p_fraction_at_most(q, c) * patch_psi_fraction_above(q, theta);
    }
  }
  return finish(mass_a(measure, theta, premium), t);
}

std::size_t boundary_atom_count(const PopulationMeasure& measure, const PricePair& prices) {
  if (!measure.is_atomic()) return 0;
  std::size_t count = 0;
  for (const auto& atom : measure.planar_atoms()) {
    if (on_region_boundary(atom.p, atom.psi, prices)) ++count;
  }
  return count;
}

double insured_mass_premium_derivative(const PopulationMeasure& measure, const PricePair& prices) {
  check_prices(prices);
  const double theta = prices.theta;
  const double premium = prices.premium;
  if (!(premium < theta)) return 0.0;
  if (measure.is_product() && measure.has_density() && premium > 0.0) {
    const auto& form = measure.product_form();
    const double c = premium / theta;
    const double lo = std::max(c, form.p.support_lower());
    const double hi = std::min(1.0, form.p.support_upper());
    if (!(lo < hi)) return 0.0;
    // Moving lower limit p = premium/theta, where S_psi(premium/p) = S_psi(theta).
    double boundary = 0.0;
    if (c >= form.p.support_lower()) boundary = -form.psi.survival(theta) * form.p.density(c) / theta;
    const auto integrand = [&](double p) {
      return -form.psi.density(premium / p) / p * form.p.density(p);
    };
    return boundary + integrate_split(integrand, lo, hi, insured_integrand_cuts(form, premium));
  }
  const double h = 1e-6 * std::max(theta, 1e-12);
  const double up = std::min(premium + h, theta);
  const double down = std::max(premium - h, 0.0);
  return (mass_a(measure, theta, up) - mass_a(measure, theta, down)) / (up - down);
}

AgentSample draw_agents(const PopulationMeasure& measure, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample size must be at least 1");
  Rng rng(seed);
  AgentSample sample;
  sample.p.resize(n);
  sample.psi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::tie(sample.p[i], sample.psi[i]) = measure.sample_one(rng);
  }
  return sample;
}

MonteCarloMasses mc_region_masses(const AgentSample& sample, const PricePair& prices) {
  check_prices(prices);
  const std::size_t n = sample.p.size();
  std::size_t a = 0;
  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    switch (classify(sample.p[i], sample.psi[i], prices)) {
      case Choice::kInsure:
        ++a;
        break;
      case Choice::kTreat:
        ++t;
        break;
      case Choice::kNoAccess:
        break;
    }
  }
  const double nd = static_cast<double>(n);
  const double fa = static_cast<double>(a) / nd;
  const double ft = static_cast<double>(t) / nd;
  const double fo = static_cast<double>(n - a - t) / nd;
  const auto se = [nd](double f) { return std::sqrt(f * (1.0 - f) / nd); };
  return {{fa, ft, fo}, {se(fa), se(ft), se(fo)}, n};
}

MonteCarloMasses mc_region_masses(const PopulationMeasure& measure, const PricePair& prices,
                                  std::size_t n, std::uint64_t seed) {
  if (n < 1000) throw DomainError("Monte Carlo oracle needs at least 1000 draws");
  if (measure.is_atomic()) {
    return {region_masses(measure, prices), {0.0, 0.0, 0.0}, n};
  }
  return mc_region_masses(draw_agents(measure, n, seed), prices);
}

}  // namespace drugmarket
