#include "drugmarket/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "drugmarket/errors.hpp"
#include "drugmarket/special_functions.hpp"

namespace drugmarket {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kWeightTol = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + " must be finite");
}

}  // namespace

double uniform_open01(Rng& rng) {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  const std::uint64_t bits = rng() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Marginal

Marginal::Marginal(Kind kind) : kind_(std::move(kind)) {
  if (const auto* b = std::get_if<BetaParams>(&kind_)) {
    log_norm_ = special::log_beta(b->s1, b->s2);
  }
}

Marginal Marginal::beta(double s1, double s2) {
  require_finite(s1, "beta shape");
  require_finite(s2, "beta shape");
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw DomainError("beta shapes must be positive");
  return Marginal(BetaParams{s1, s2});
}

Marginal Marginal::exponential(double rate) {
  require_finite(rate, "exponential rate");
  if (!(rate > 0.0)) throw DomainError("exponential rate must be positive");
  return Marginal(ExponentialParams{rate});
}

Marginal Marginal::pareto(double scale, double shape) {
  require_finite(scale, "pareto scale");
  require_finite(shape, "pareto shape");
  if (!(scale > 0.0) || !(shape > 0.0)) throw DomainError("pareto scale and shape must be positive");
  return Marginal(ParetoParams{scale, shape});
}

Marginal Marginal::uniform(double lo, double hi) {
  require_finite(lo, "uniform bound");
  require_finite(hi, "uniform bound");
  if (!(lo < hi)) throw DomainError("uniform interval needs lo < hi");
  return Marginal(UniformParams{lo, hi});
}

Marginal Marginal::atoms(std::vector<Atom> atoms) {
  if (atoms.empty()) throw DomainError("atom mixture needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms) {
    require_finite(a.location, "atom location");
    if (!(a.weight >= 0.0) || !std::isfinite(a.weight)) throw DomainError("atom weights must be >= 0");
    total += a.weight;
  }
  if (std::fabs(total - 1.0) > kWeightTol) {
    throw DomainError("atom weights sum to " + num(total) + ", expected 1");
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  std::vector<Atom> merged;
  for (const auto& a : atoms) {
    if (a.weight == 0.0) continue;
    if (!merged.empty() && merged.back().location == a.location) {
      merged.back().weight += a.weight;
    } else {
      merged.push_back(a);
    }
  }
  return Marginal(std::move(merged));
}

double Marginal::cdf(double x) const {
  return std::visit(
      Overloaded{
          [&](const BetaParams& b) { return special::incomplete_beta(b.s1, b.s2, x); },
          [&](const ExponentialParams& e) { return x <= 0.0 ? 0.0 : -std::expm1(-e.rate * x); },
          [&](const ParetoParams& p) {
            return x <= p.scale ? 0.0 : -std::expm1(p.shape * std::log(p.scale / x));
          },
          [&](const UniformParams& u) {
            if (x <= u.lo) return 0.0;
            if (x >= u.hi) return 1.0;
            return (x - u.lo) / (u.hi - u.lo);
          },
          [&](const std::vector<Atom>& atoms) {
            double acc = 0.0;
            for (const auto& a : atoms) {
              if (a.location > x) break;
              acc += a.weight;
            }
            return std::min(acc, 1.0);
          }},
      kind_);
}

double Marginal::survival(double x) const {
  return std::visit(
      Overloaded{
          [&](const BetaParams& b) {
            if (x <= 0.0) return 1.0;
            if (x >= 1.0) return 0.0;
            // I_{1-x}(s2, s1) is the upper tail without cancellation.
            return special::incomplete_beta(b.s2, b.s1, 1.0 - x);
          },
          [&](const ExponentialParams& e) { return x <= 0.0 ? 1.0 : std::exp(-e.rate * x); },
          [&](const ParetoParams& p) {
            return x <= p.scale ? 1.0 : std::exp(p.shape * std::log(p.scale / x));
          },
          [&](const UniformParams& u) {
            if (x <= u.lo) return 1.0;
            if (x >= u.hi) return 0.0;
            return (u.hi - x) / (u.hi - u.lo);
          },
          [&](const std::vector<Atom>& atoms) {
            double acc = 0.0;
            for (auto it = atoms.rbegin(); it != atoms.rend() && it->location > x; ++it) {
              acc += it->weight;
            }
            return std::min(acc, 1.0);
          }},
      kind_);
}

double Marginal::density(double x) const {
  return std::visit(
      Overloaded{
          [&](const BetaParams& b) {
            if (x <= 0.0 || x >= 1.0) return 0.0;
            return std::exp((b.s1 - 1.0) * std::log(x) + (b.s2 - 1.0) * std::log1p(-x) -
                            log_norm_);
          },
          [&](const ExponentialParams& e) { return x < 0.0 ? 0.0 : e.rate * std::exp(-e.rate * x); },
          [&](const ParetoParams& p) {
            if (x < p.scale) return 0.0;
            return p.shape / x * std::exp(p.shape * std::log(p.scale / x));
          },
          [&](const UniformParams& u) { return (x < u.lo || x > u.hi) ? 0.0 : 1.0 / (u.hi - u.lo); },
          [&](const std::vector<Atom>&) { return 0.0; }},
      kind_);
}

double Marginal::beta_quantile(double q) const {
  // Newton steps on the cdf, safeguarded by a shrinking bisection bracket.
  double lo = 0.0;
  double hi = 1.0;
  const auto& b = std::get<BetaParams>(kind_);
  double x = std::clamp(b.s1 / (b.s1 + b.s2), 1e-6, 1.0 - 1e-6);
  for (int it = 0; it < 200; ++it) {
    const double f = cdf(x) - q;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(hi, 1e-300)) break;
    const double d = density(x);
    double next = (d > 0.0 && std::isfinite(d)) ? x - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-15 * std::max(x, 1e-300)) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

double Marginal::quantile(double q) const {
  if (!(q >= 0.0) || q > 1.0) throw DomainError("quantile level must lie in [0, 1]");
  if (q == 1.0 && !bounded()) throw DomainError("quantile(1) is infinite for unbounded support");
  return std::visit(
      Overloaded{
          [&](const BetaParams&) {
            if (q == 0.0) return 0.0;
            if (q == 1.0) return 1.0;
            return beta_quantile(q);
          },
          [&](const ExponentialParams& e) { return -std::log1p(-q) / e.rate; },
          [&](const ParetoParams& p) { return p.scale * std::exp(-std::log1p(-q) / p.shape); },
          [&](const UniformParams& u) { return u.lo + q * (u.hi - u.lo); },
          [&](const std::vector<Atom>& atoms) {
            double acc = 0.0;
            for (const auto& a : atoms) {
              acc += a.weight;
              if (acc >= q - kWeightTol) return a.location;
            }
            return atoms.back().location;
          }},
      kind_);
}

double Marginal::sample_one(Rng& rng) const {
  const double u = uniform_open01(rng);
  if (const auto* atoms = std::get_if<std::vector<Atom>>(&kind_)) {
    double acc = 0.0;
    for (const auto& a : *atoms) {
      acc += a.weight;
      if (u < acc) return a.location;
    }
    return atoms->back().location;
  }
  return quantile(u);
}

std::vector<double> Marginal::sample(Rng& rng, std::size_t n) const {
  if (n == 0) throw DomainError("sample size must be at least 1");
  std::vector<double> out(n);
  for (auto& x : out) x = sample_one(rng);
  return out;
}

double Marginal::support_lower() const {
  return std::visit(Overloaded{[](const BetaParams&) { return 0.0; },
                               [](const ExponentialParams&) { return 0.0; },
                               [](const ParetoParams& p) { return p.scale; },
                               [](const UniformParams& u) { return u.lo; },
                               [](const std::vector<Atom>& a) { return a.front().location; }},
                    kind_);
}

double Marginal::support_upper() const {
  return std::visit(Overloaded{[](const BetaParams&) { return 1.0; },
                               [](const ExponentialParams&) { return kInf; },
                               [](const ParetoParams&) { return kInf; },
                               [](const UniformParams& u) { return u.hi; },
                               [](const std::vector<Atom>& a) { return a.back().location; }},
                    kind_);
}

bool Marginal::bounded() const { return std::isfinite(support_upper()); }

std::vector<double> Marginal::breakpoints() const {
  return std::visit(
      Overloaded{[](const BetaParams&) { return std::vector<double>{0.0, 1.0}; },
                 [](const ExponentialParams&) { return std::vector<double>{0.0}; },
                 [](const ParetoParams& p) { return std::vector<double>{p.scale}; },
                 [](const UniformParams& u) { return std::vector<double>{u.lo, u.hi}; },
                 [](const std::vector<Atom>& a) {
                   std::vector<double> out;
                   for (const auto& x : a) out.push_back(x.location);
                   return out;
                 }},
      kind_);
}

double Marginal::mean() const {
  return std::visit(
      Overloaded{[](const BetaParams& b) { return b.s1 / (b.s1 + b.s2); },
                 [](const ExponentialParams& e) { return 1.0 / e.rate; },
                 [](const ParetoParams& p) {
                   return p.shape > 1.0 ? p.shape * p.scale / (p.shape - 1.0) : kInf;
                 },
                 [](const UniformParams& u) { return 0.5 * (u.lo + u.hi); },
                 [](const std::vector<Atom>& atoms) {
                   double m = 0.0;
                   for (const auto& a : atoms) m += a.weight * a.location;
                   return m;
                 }},
      kind_);
}

bool Marginal::finite_mean() const { return std::isfinite(mean()); }

bool Marginal::heavy_tailed() const { return std::holds_alternative<ParetoParams>(kind_); }

double Marginal::scale() const {
  double s = heavy_tailed() ? quantile(0.5) : std::fabs(mean());
  if (!(s > 0.0)) {
    s = std::max(std::fabs(support_lower()), std::fabs(support_upper()));
  }
  return s > 0.0 && std::isfinite(s) ? s : 1.0;
}

std::string Marginal::describe() const {
  return std::visit(
      Overloaded{
          [](const BetaParams& b) { return "beta(" + num(b.s1) + "," + num(b.s2) + ")"; },
          [](const ExponentialParams& e) { return "exp(" + num(e.rate) + ")"; },
          [](const ParetoParams& p) { return "pareto(" + num(p.scale) + "," + num(p.shape) + ")"; },
          [](const UniformParams& u) { return "uniform(" + num(u.lo) + "," + num(u.hi) + ")"; },
          [](const std::vector<Atom>& atoms) {
            std::string s = "atoms[";
            for (std::size_t i = 0; i < atoms.size(); ++i) {
              if (i) s += ",";
              s += "(" + num(atoms[i].location) + "," + num(atoms[i].weight) + ")";
            }
            return s + "]";
          }},
      kind_);
}

// ---------------------------------------------------------------------------
// PopulationMeasure

namespace {

void check_incidence(double r) {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("incidence rate r must lie in (0, 1), got " + num(r));
}

void check_total(double total) {
  if (std::fabs(total - 1.0) > kWeightTol) {
    throw DomainError("population weights sum to " + num(total) + ", expected 1");
  }
}

double patch_psi_fraction_above(const UniformPatch& patch, double x) {
  if (x <= patch.psi_lo) return 1.0;
  if (x >= patch.psi_hi) return 0.0;
  return (patch.psi_hi - x) / (patch.psi_hi - patch.psi_lo);
}

}  // namespace

PopulationMeasure::PopulationMeasure(Form form, double incidence)
    : form_(std::move(form)), incidence_(incidence) {}

PopulationMeasure PopulationMeasure::product(Marginal p, Marginal psi, double incidence) {
  check_incidence(incidence);
  if (p.support_lower() < 0.0 || p.support_upper() > 1.0) {
    throw DomainError("p-marginal must be supported in [0, 1], got " + p.describe());
  }
  if (psi.support_lower() < 0.0) {
    throw DomainError("psi-marginal must be supported in [0, inf), got " + psi.describe());
  }
  return PopulationMeasure(ProductForm{std::move(p), std::move(psi)}, incidence);
}

PopulationMeasure PopulationMeasure::atoms(std::vector<PlanarAtom> atoms, double incidence) {
  check_incidence(incidence);
  if (atoms.empty()) throw DomainError("planar atom list is empty");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.p >= 0.0 && a.p <= 1.0)) throw DomainError("atom p must lie in [0, 1]");
    if (!(a.psi >= 0.0) || !std::isfinite(a.psi)) throw DomainError("atom psi must be finite and >= 0");
    if (!(a.weight >= 0.0)) throw DomainError("atom weights must be >= 0");
    total += a.weight;
  }
  check_total(total);
  return PopulationMeasure(std::move(atoms), incidence);
}

PopulationMeasure PopulationMeasure::patches(std::vector<UniformPatch> patches, double incidence) {
  check_incidence(incidence);
  if (patches.empty()) throw DomainError("patch list is empty");
  double total = 0.0;
  for (const auto& q : patches) {
    if (!(q.p_lo >= 0.0 && q.p_hi <= 1.0 && q.p_lo < q.p_hi)) {
      throw DomainError("patch p-range must be a non-degenerate sub-interval of [0, 1]");
    }
    if (!(q.psi_lo >= 0.0 && q.psi_lo < q.psi_hi) || !std::isfinite(q.psi_hi)) {
      throw DomainError("patch psi-range must be a non-degenerate sub-interval of [0, inf)");
    }
    if (!(q.weight >= 0.0)) throw DomainError("patch weights must be >= 0");
    total += q.weight;
  }
  check_total(total);
  return PopulationMeasure(std::move(patches), incidence);
}

bool PopulationMeasure::has_density() const {
  if (is_patches()) return true;
  if (is_product()) return product_form().p.has_density() && product_form().psi.has_density();
  return false;
}

double PopulationMeasure::psi_survival(double x) const {
  return std::visit(Overloaded{[&](const ProductForm& f) { return f.psi.survival(x); },
                               [&](const std::vector<PlanarAtom>& atoms) {
                                 double acc = 0.0;
                                 for (const auto& a : atoms) {
                                   if (a.psi > x) acc += a.weight;
                                 }
                                 return std::min(acc, 1.0);
                               },
                               [&](const std::vector<UniformPatch>& patches) {
                                 double acc = 0.0;
                                 for (const auto& q : patches) {
                                   acc += q.weight * patch_psi_fraction_above(q, x);
                                 }
                                 return std::min(acc, 1.0);
                               }},
                    form_);
}

double PopulationMeasure::profit_potential() const { return psi_survival(0.0); }

double PopulationMeasure::psi_upper() const {
  return std::visit(Overloaded{[](const ProductForm& f) { return f.psi.support_upper(); },
                               [](const std::vector<PlanarAtom>& atoms) {
                                 double m = 0.0;
                                 for (const auto& a : atoms) m = std::max(m, a.psi);
                                 return m;
                               },
                               [](const std::vector<UniformPatch>& patches) {
                                 double m = 0.0;
                                 for (const auto& q : patches) m = std::max(m, q.psi_hi);
                                 return m;
                               }},
                    form_);
}

double PopulationMeasure::psi_quantile(double q) const {
  if (is_product()) return product_form().psi.quantile(q);
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  // Bisection on the cdf over the bounded support.
  double lo = 0.0;
  double hi = psi_upper();
  if (1.0 - psi_survival(lo) >= q) return lo;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (1.0 - psi_survival(mid) >= q) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double PopulationMeasure::psi_scale() const {
  if (is_product()) return product_form().psi.scale();
  const double median = psi_quantile(0.5);
  if (median > 0.0) return median;
  const double upper = psi_upper();
  return upper > 0.0 ? upper : 1.0;
}

bool PopulationMeasure::psi_finite_mean() const {
  return !is_product() || product_form().psi.finite_mean();
}

bool PopulationMeasure::psi_heavy_tailed() const {
  return is_product() && product_form().psi.heavy_tailed();
}

std::pair<double, double> PopulationMeasure::sample_one(Rng& rng) const {
  return std::visit(
      Overloaded{[&](const ProductForm& f) {
                   const double p = f.p.sample_one(rng);
                   const double psi = f.psi.sample_one(rng);
                   return std::pair{p, psi};
                 },
                 [&](const std::vector<PlanarAtom>& atoms) {
                   const double u = uniform_open01(rng);
                   double acc = 0.0;
                   for (const auto& a : atoms) {
                     acc += a.weight;
                     if (u < acc) return std::pair{a.p, a.psi};
                   }
                   return std::pair{atoms.back().p, atoms.back().psi};
                 },
                 [&](const std::vector<UniformPatch>& patches) {
                   const double u = uniform_open01(rng);
                   double acc = 0.0;
                   const UniformPatch* chosen = &patches.back();
                   for (const auto& q : patches) {
                     acc += q.weight;
                     if (u < acc) {
                       chosen = &q;
                       break;
                     }
                   }
                   const double p = chosen->p_lo + uniform_open01(rng) * (chosen->p_hi - chosen->p_lo);
                   const double psi =
                       chosen->psi_lo + uniform_open01(rng) * (chosen->psi_hi - chosen->psi_lo);
                   return std::pair{p, psi};
                 }},
      form_);
}

PopulationMeasure PopulationMeasure::with_incidence(double incidence) const {
  check_incidence(incidence);
  PopulationMeasure copy = *this;
  copy.incidence_ = incidence;
  return copy;
}

std::string PopulationMeasure::describe() const {
  std::string body = std::visit(
      Overloaded{[](const ProductForm& f) { return f.p.describe() + " x " + f.psi.describe(); },
                 [](const std::vector<PlanarAtom>& atoms) {
                   std::string s = "atoms[";
                   for (std::size_t i = 0; i < atoms.size(); ++i) {
                     if (i) s += ",";
                     s += "(" + num(atoms[i].p) + "," + num(atoms[i].psi) + "," +
                          num(atoms[i].weight) + ")";
                   }
                   return s + "]";
                 },
                 [](const std::vector<UniformPatch>& patches) {
                   return "smoothed[" + std::to_string(patches.size()) + " patches]";
                 }},
      form_);
  return body + ", r=" + num(incidence_);
}

PopulationMeasure smooth_atoms(const PopulationMeasure& measure, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("smoothing radius must be positive");
  if (!measure.is_atomic()) throw PreconditionError("smooth_atoms expects a planar-atom population");
  std::vector<UniformPatch> patches;
  for (const auto& a : measure.planar_atoms()) {
    if (a.weight == 0.0) continue;
    UniformPatch q{std::max(0.0, a.p - radius), std::min(1.0, a.p + radius),
                   std::max(0.0, a.psi - radius), a.psi + radius, a.weight};
    patches.push_back(q);
  }
  return PopulationMeasure::patches(std::move(patches), measure.incidence());
}

}  // namespace drugmarket
