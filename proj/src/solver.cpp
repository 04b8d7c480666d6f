#include "drugmarket/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>

#include "drugmarket/errors.hpp"
#include "drugmarket/line_search.hpp"

namespace drugmarket {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTieTol = 1e-13;
constexpr int kMaxStretch = 20;

bool same_value(double a, double b) {
  if (a == b) return true;
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return std::fabs(a - b) <= kTieTol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

// Larger value wins; near-ties go to the smaller abscissa.
bool improves(double value, double x, double best_value, double best_x) {
  if (std::isnan(value)) return false;
  if (std::isnan(best_value)) return true;
  if (same_value(value, best_value)) return x < best_x;
  return value > best_value;
}

struct GridMaximum {
  ScalarMaximum best{0.0, kNegInf, 0};
  std::vector<ScalarMaximum> locals;
  std::size_t evaluations = 0;
};

// Coarse scan of f on xs, then golden-section refinement of the brackets
// around grid maxima. max_brackets == 0 refines all of them.
GridMaximum grid_refine_maximize(const std::function<double(double)>& f, const std::vector<double>& xs,
                                 std::size_t max_brackets, bool include_endpoints, double width_rel,
                                 unsigned threads) {
  GridMaximum out;
  const std::size_t n = xs.size();
  std::vector<double> values(n);
  parallel_for(n, threads, [&](std::size_t i) { values[i] = f(xs[i]); });
  out.evaluations = n;

  std::vector<std::size_t> idx = grid_local_maxima(values);
  if (include_endpoints) {
    idx.push_back(0);
    idx.push_back(n - 1);
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  idx.erase(std::remove_if(idx.begin(), idx.end(),
                           [&](std::size_t i) { return std::isnan(values[i]) || values[i] == kNegInf; }),
            idx.end());
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return improves(values[a], xs[a], values[b], xs[b]);
  });
  if (max_brackets > 0 && idx.size() > max_brackets) idx.resize(max_brackets);

  out.locals.resize(idx.size());
  parallel_for(idx.size(), threads, [&](std::size_t k) {
    const std::size_t i = idx[k];
    const double lo = xs[i == 0 ? 0 : i - 1];
    const double hi = xs[std::min(i + 1, n - 1)];
    ScalarMaximum local{xs[i], values[i], 0};
    const double width = width_rel * std::max(std::fabs(xs[i]), std::numeric_limits<double>::min());
    if (hi - lo > width) {
      const ScalarMaximum refined = golden_section_maximize(f, lo, hi, width);
      local.evaluations = refined.evaluations;
      if (improves(refined.value, refined.x, local.value, local.x)) {
        local.x = refined.x;
        local.value = refined.value;
      }
    }
    out.locals[k] = local;
  });
  for (const auto& local : out.locals) {
    out.evaluations += local.evaluations;
    if (improves(local.value, local.x, out.best.value, out.best.x)) {
      out.best.x = local.x;
      out.best.value = local.value;
    }
  }
  out.best.evaluations = out.evaluations;
  return out;
}

void require_density(const PopulationMeasure& measure, const char* who) {
  if (!measure.has_density()) {
    throw PreconditionError(std::string(who) +
                            " needs a population with a density; smooth atomic populations "
                            "with smooth_atoms first");
  }
}

void require_profit_potential(const PopulationMeasure& measure) {
  if (!(measure.profit_potential() > 0.0)) {
    throw PreconditionError("no profit potential: the population has no mass with psi > 0");
  }
}

// P_p(theta, .) <= U(theta) = theta r S_psi(theta r), and U(theta) <= 2 U(t_k)
// on [t_k, 2 t_k] because S_psi is nonincreasing. Sampling the dyadic points
// therefore bounds the producer profit everywhere above theta_max.
double tail_bound_beyond(const PopulationMeasure& measure, double theta_max) {
  double bound = 0.0;
  double theta = theta_max;
  for (int k = 0; k < 64 && std::isfinite(theta); ++k, theta *= 2.0) {
    bound = std::max(bound, 2.0 * producer_profit_upper_bound(measure, theta));
  }
  return bound;
}

void fill_domain_diagnostics(SearchDiagnostics& diag, const PopulationMeasure& measure,
                             const PriceDomain& domain, const SolverOptions& options) {
  diag.theta_min = domain.lo;
  diag.theta_max = domain.hi;
  diag.log_spaced = domain.log_spaced;
  diag.price_grid = options.price_grid;
  diag.premium_grid = options.premium_grid;
  diag.tail_bound = tail_bound_beyond(measure, domain.hi);
  if (!measure.psi_finite_mean()) {
    diag.certified = false;
    diag.warnings.push_back(
        "psi-marginal has an infinite mean; the producer profit need not vanish for large prices "
        "and the result only covers the truncated price range");
  }
}

void certify_against_tail(SearchDiagnostics& diag, double incumbent) {
  if (diag.tail_bound > incumbent) {
    diag.certified = false;
    diag.warnings.push_back("producer-profit bound beyond theta_max exceeds the reported optimum");
  }
}

std::vector<double> price_grid(const PriceDomain& domain, std::size_t n) {
  return domain.log_spaced ? log_grid(domain.lo, domain.hi, n) : linear_grid(domain.lo, domain.hi, n);
}

void check_options(const SolverOptions& options) {
  if (options.premium_grid < 3 || options.price_grid < 3) {
    throw DomainError("search grids need at least 3 points");
  }
  if (!(options.premium_tol > 0.0) || !(options.price_tol > 0.0)) {
    throw DomainError("search tolerances must be positive");
  }
}

Candidate make_candidate(const PopulationMeasure& measure, double theta, double premium) {
  return {theta, premium, profits(measure, {theta, premium})};
}

EquilibriumResult assemble(EquilibriumKind kind, const PopulationMeasure& measure, double theta,
                           double premium) {
  EquilibriumResult result;
  result.kind = kind;
  result.theta = theta;
  result.premium = premium;
  result.masses = region_masses(measure, {theta, premium});
  result.profits = profits_from_masses(result.masses, {theta, premium}, measure.incidence());
  return result;
}

struct InnerDictatorial {
  double premium = PricePair::kNoEntry;
  double value = kNegInf;
  bool fallback = false;
  std::size_t evaluations = 0;
};

// max P_i(theta, .) over premiums in [theta r, theta] with P_p >= floor.
InnerDictatorial dictatorial_inner(const PopulationMeasure& measure, double theta, double floor,
                                   const SolverOptions& options) {
  InnerDictatorial out;
  const double r = measure.incidence();
  const double lo = theta * r;
  const auto producer = [&](double premium) { return profits(measure, {theta, premium}).producer; };
  if (producer(lo) < floor) return out;

  // P_p(theta, .) is nonincreasing in the premium because O grows with it.
  constexpr std::size_t kProbe = 17;
  const double noise = 1e-8 * std::max(1.0, theta * r);
  bool monotone = true;
  double previous = std::numeric_limits<double>::infinity();
  for (double premium : linear_grid(lo, theta, kProbe)) {
    const double value = producer(premium);
    if (value > previous + noise) monotone = false;
    previous = value;
  }
  out.evaluations += kProbe + 1;

  double hi = theta;
  if (monotone && producer(theta) < floor) {
    double feasible = lo;
    double infeasible = theta;
    while (infeasible - feasible > options.premium_tol * theta) {
      const double mid = 0.5 * (feasible + infeasible);
      if (producer(mid) >= floor) {
        feasible = mid;
      } else {
        infeasible = mid;
      }
      ++out.evaluations;
    }
    hi = feasible;
  }
  out.fallback = !monotone;

  const auto objective = [&](double premium) {
    const ProfitPair pp = profits(measure, {theta, premium});
    return pp.producer >= floor ? pp.insurer : kNegInf;
  };
  if (hi - lo <= options.premium_tol * theta) {
    out.premium = lo;
    out.value = objective(lo);
    return out;
  }
  const GridMaximum found = grid_refine_maximize(objective, linear_grid(lo, hi, options.premium_grid),
                                                 0, true, options.premium_tol, 1);
  out.premium = found.best.x;
  out.value = found.best.value;
  out.evaluations += found.evaluations;
  return out;
}

// Producer participation needs P_p(theta, theta r) >= floor, which usually
// holds on a narrow band of prices. The outer grid is concentrated on the
// band seen by a first scan so that it is resolved by many points.
std::vector<double> dictatorial_grid(const PopulationMeasure& measure, const PriceDomain& domain,
                                     double floor, const SolverOptions& options) {
  const std::vector<double> coarse = price_grid(domain, options.price_grid);
  const double r = measure.incidence();
  std::vector<char> feasible(coarse.size());
  parallel_for(coarse.size(), options.threads, [&](std::size_t i) {
    feasible[i] = profits(measure, {coarse[i], coarse[i] * r}).producer >= floor;
  });
  const auto first = std::find(feasible.begin(), feasible.end(), 1);
  if (first == feasible.end()) return coarse;
  const auto last = std::find(feasible.rbegin(), feasible.rend(), 1);
  const std::size_t i0 = static_cast<std::size_t>(first - feasible.begin());
  const std::size_t i1 = coarse.size() - 1 - static_cast<std::size_t>(last - feasible.rbegin());
  const double lo = coarse[i0 == 0 ? 0 : i0 - 1];
  const double hi = coarse[std::min(i1 + 1, coarse.size() - 1)];
  return domain.log_spaced ? log_grid(lo, hi, options.price_grid)
                           : linear_grid(lo, hi, options.price_grid);
}

}  // namespace

std::string kind_name(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::kSubgamePerfect:
      return "spne";
    case EquilibriumKind::kDictatorial:
      return "dictatorial";
    case EquilibriumKind::kNoInsuranceBaseline:
      return "baseline";
  }
  return "unknown";
}

EquilibriumKind parse_kind(const std::string& name) {
  if (name == "spne") return EquilibriumKind::kSubgamePerfect;
  if (name == "dictatorial") return EquilibriumKind::kDictatorial;
  if (name == "baseline") return EquilibriumKind::kNoInsuranceBaseline;
  throw DomainError("unknown equilibrium kind '" + name + "' (expected spne, dictatorial or baseline)");
}

PriceDomain price_domain(const PopulationMeasure& measure, const SolverOptions& options) {
  PriceDomain domain;
  domain.lo = 1e-8 * measure.psi_scale();
  const double r = measure.incidence();
  if (options.theta_max > 0.0) {
    domain.hi = options.theta_max;
  } else if (std::isfinite(measure.psi_upper())) {
    // Above psi_max / r every premium in the strip prices all agents out.
    domain.hi = measure.psi_upper() / r;
  } else {
    domain.hi = measure.psi_quantile(1.0 - options.tail_mass) / r;
  }
  if (!(domain.hi > domain.lo)) throw DomainError("empty price search range");
  domain.log_spaced = measure.psi_heavy_tailed();
  if (options.theta_max > 0.0) return domain;

  // Stretch the range until the profit bound above it is negligible against
  // the no-insurer optimum, which every equilibrium weakly beats.
  const std::vector<double> probe = price_grid(domain, 256);
  double incumbent = 0.0;
  for (double theta : probe) incumbent = std::max(incumbent, no_insurer_profit(measure, theta));
  for (int k = 0; k < kMaxStretch; ++k) {
    if (2.0 * producer_profit_upper_bound(measure, domain.hi) <= 1e-6 * incumbent) break;
    domain.hi *= 2.0;
  }
  return domain;
}

BestResponse best_response(const PopulationMeasure& measure, double theta,
                           const SolverOptions& options) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError("best_response needs theta > 0");
  check_options(options);
  const double r = measure.incidence();
  const double lo = theta * r;
  const auto insurer = [&](double premium) { return profits(measure, {theta, premium}).insurer; };
  const GridMaximum found = grid_refine_maximize(insurer, linear_grid(lo, theta, options.premium_grid),
                                                 0, true, options.premium_tol, 1);
  BestResponse out;
  if (!(found.best.value > 0.0)) return out;
  out.premium = found.best.x;
  out.insurer_profit = found.best.value;
  const double edge = 1e-12 * theta;
  out.is_interior = out.premium > lo + edge && out.premium < theta - edge;
  if (out.is_interior) {
    out.stationarity_residual =
        std::fabs(insurer_profit_premium_derivative(measure, {theta, out.premium}));
  }
  return out;
}

EquilibriumResult baseline(const PopulationMeasure& measure, const SolverOptions& options) {
  check_options(options);
  const PriceDomain domain = price_domain(measure, options);
  const auto producer = [&](double theta) { return no_insurer_profit(measure, theta); };
  const GridMaximum found = grid_refine_maximize(producer, price_grid(domain, options.price_grid),
                                                 options.refine_brackets, true, options.price_tol,
                                                 options.threads);
  double theta = found.best.x;
  double value = found.best.value;
  std::vector<double> extra;
  // The supremum over an atom at psi_j is approached from just below psi_j.
  if (measure.is_atomic()) {
    for (const auto& atom : measure.planar_atoms()) extra.push_back(atom.psi);
  } else if (measure.is_product() && measure.product_form().psi.is_atomic()) {
    extra = measure.product_form().psi.breakpoints();
  }
  for (double x : extra) {
    const double below = x * (1.0 - 1e-12);
    if (!(below > 0.0)) continue;
    const double v = producer(below);
    if (improves(v, below, value, theta)) {
      theta = below;
      value = v;
    }
  }

  EquilibriumResult result =
      assemble(EquilibriumKind::kNoInsuranceBaseline, measure, theta, PricePair::kNoEntry);
  for (const auto& local : found.locals) {
    result.candidates.push_back(make_candidate(measure, local.x, PricePair::kNoEntry));
  }
  fill_domain_diagnostics(result.diagnostics, measure, domain, options);
  result.diagnostics.refinement_evaluations = found.evaluations;
  result.diagnostics.baseline_profit = result.profits.producer;
  if (!(measure.profit_potential() > 0.0)) {
    result.diagnostics.warnings.push_back("no profit potential: no mass with psi > 0");
  }
  certify_against_tail(result.diagnostics, result.profits.producer);
  return result;
}

EquilibriumResult spne(const PopulationMeasure& measure, const SolverOptions& options) {
  require_density(measure, "spne");
  require_profit_potential(measure);
  check_options(options);
  const PriceDomain domain = price_domain(measure, options);

  const auto producer = [&](double theta) {
    const BestResponse br = best_response(measure, theta, options);
    return profits(measure, {theta, br.premium}).producer;
  };
  const GridMaximum found = grid_refine_maximize(producer, price_grid(domain, options.price_grid),
                                                 options.refine_brackets, true, options.price_tol,
                                                 options.threads);

  const double theta = found.best.x;
  const BestResponse br = best_response(measure, theta, options);
  EquilibriumResult result = assemble(EquilibriumKind::kSubgamePerfect, measure, theta, br.premium);
  for (const auto& local : found.locals) {
    const BestResponse local_br = best_response(measure, local.x, options);
    result.candidates.push_back(make_candidate(measure, local.x, local_br.premium));
  }
  fill_domain_diagnostics(result.diagnostics, measure, domain, options);
  result.diagnostics.refinement_evaluations = found.evaluations;
  result.diagnostics.stationarity_residual = br.stationarity_residual;
  if (!br.enters()) result.diagnostics.warnings.push_back("insurer does not enter at the optimum");
  certify_against_tail(result.diagnostics, result.profits.producer);
  return result;
}

EquilibriumResult dictatorial(const PopulationMeasure& measure, const SolverOptions& options) {
  require_density(measure, "dictatorial");
  require_profit_potential(measure);
  check_options(options);
  const EquilibriumResult base = baseline(measure, options);
  const double floor = base.profits.producer - options.participation_tol;
  const PriceDomain domain = price_domain(measure, options);

  std::atomic<bool> fallback{false};
  const auto insurer = [&](double theta) {
    const InnerDictatorial inner = dictatorial_inner(measure, theta, floor, options);
    if (inner.fallback) fallback = true;
    return inner.value;
  };
  const GridMaximum found = grid_refine_maximize(insurer, dictatorial_grid(measure, domain, floor, options),
                                                 options.refine_brackets, true, options.price_tol,
                                                 options.threads);

  // Participation always holds at the no-insurer optimum because entry only
  // moves agents out of O. That price can sit in a band far narrower than the
  // grid spacing, so it is always a candidate.
  double theta = found.best.x;
  double value = found.best.value;
  const InnerDictatorial at_base = dictatorial_inner(measure, base.theta, floor, options);
  if (improves(at_base.value, base.theta, value, theta)) {
    theta = base.theta;
    value = at_base.value;
  }

  if (!(value > 0.0)) {
    EquilibriumResult result = base;
    result.diagnostics.warnings.push_back(
        "insurer never enters: no premium satisfying producer participation gives a positive "
        "insurer profit");
    return result;
  }
  const InnerDictatorial inner = dictatorial_inner(measure, theta, floor, options);
  EquilibriumResult result = assemble(EquilibriumKind::kDictatorial, measure, theta, inner.premium);
  for (const auto& local : found.locals) {
    const InnerDictatorial li = dictatorial_inner(measure, local.x, floor, options);
    if (li.value == kNegInf) continue;
    result.candidates.push_back(make_candidate(measure, local.x, li.premium));
  }
  fill_domain_diagnostics(result.diagnostics, measure, domain, options);
  result.diagnostics.refinement_evaluations = found.evaluations;
  result.diagnostics.baseline_profit = base.profits.producer;
  result.diagnostics.monotonicity_fallback = fallback.load() || inner.fallback;
  if (result.diagnostics.monotonicity_fallback) {
    result.diagnostics.warnings.push_back(
        "producer profit was not monotone in the premium at some prices; used grid feasibility");
  }
  result.diagnostics.stationarity_residual =
      std::fabs(insurer_profit_premium_derivative(measure, {theta, inner.premium}));
  // Any price above the truncation bound cannot beat the baseline.
  if (result.diagnostics.tail_bound > base.profits.producer) {
    result.diagnostics.certified = false;
    result.diagnostics.warnings.push_back(
        "producer participation cannot be excluded beyond theta_max");
  }
  return result;
}

ComparisonReport compare(const PopulationMeasure& measure, const SolverOptions& options) {
  ComparisonReport report;
  report.baseline = baseline(measure, options);
  report.with_insurer = spne(measure, options);
  report.price_effect = report.with_insurer.theta - report.baseline.theta;
  report.access_effect = report.with_insurer.masses.treated() - report.baseline.masses.t;
  report.producer_gain = report.with_insurer.profits.producer - report.baseline.profits.producer;
  report.insurer_profit = report.with_insurer.profits.insurer;
  report.with_insurer.diagnostics.baseline_profit = report.baseline.profits.producer;
  if (report.producer_gain < -1e-6) {
    report.with_insurer.diagnostics.warnings.push_back(
        "producer profit with insurer fell below the no-insurer optimum");
  }
  return report;
}

std::vector<KPrimePoint> kprime_scan(const PopulationMeasure& measure,
                                     const std::vector<double>& theta_grid,
                                     const SolverOptions& options) {
  require_density(measure, "kprime_scan");
  const double floor = baseline(measure, options).profits.producer - options.participation_tol;
  std::vector<std::optional<KPrimePoint>> slots(theta_grid.size());
  parallel_for(theta_grid.size(), options.threads, [&](std::size_t i) {
    const double theta = theta_grid[i];
    if (!(theta > 0.0)) return;
    const BestResponse br = best_response(measure, theta, options);
    if (!br.enters()) return;
    const ProfitPair pp = profits(measure, {theta, br.premium});
    if (pp.producer >= floor) slots[i] = KPrimePoint{theta, br.premium, pp};
  });
  std::vector<KPrimePoint> out;
  for (auto& slot : slots) {
    if (slot) out.push_back(*slot);
  }
  return out;
}

}  // namespace drugmarket
