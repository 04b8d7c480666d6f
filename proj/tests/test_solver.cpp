#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "drugmarket/errors.hpp"
#include "drugmarket/line_search.hpp"
#include "drugmarket/solver.hpp"
#include "oracles.hpp"

using namespace drugmarket;

namespace {

PopulationMeasure beta_exp(double s1, double s2, double rate = 1.0) {
  return PopulationMeasure::product(Marginal::beta(s1, s2), Marginal::exponential(rate), 0.3);
}

PopulationMeasure beta_pareto(double shape) {
  return PopulationMeasure::product(Marginal::beta(2, 2), Marginal::pareto(1, shape), 0.3);
}

// Producer-optimal SPNE by exhaustive search over a dense theta grid, using
// the insurer's best response at each price.
struct Brute {
  double theta, value;
};
Brute brute_spne(const PopulationMeasure& m, double lo, double hi, int n_theta) {
  Brute best{lo, -1};
  for (int i = 0; i <= n_theta; ++i) {
    const double theta = lo + (hi - lo) * i / n_theta;
    const double premium = best_response(m, theta, {}).premium;
    const double v = profits(m, {theta, premium}).producer;
    if (v > best.value) best = {theta, v};
  }
  return best;
}

}  // namespace

TEST_CASE("kind names round trip") {
  for (auto k : {EquilibriumKind::kSubgamePerfect, EquilibriumKind::kDictatorial,
                 EquilibriumKind::kNoInsuranceBaseline}) {
    CHECK(parse_kind(kind_name(k)) == k);
  }
  CHECK_THROWS_AS(parse_kind("nash"), DomainError);
}

TEST_CASE("best response at theta 1.113") {
  const auto m = beta_exp(2, 3);
  const BestResponse br = best_response(m, 1.113, {});
  CHECK(br.premium == doctest::Approx(0.540).epsilon(0.0005 / 0.54));
  CHECK(br.premium == doctest::Approx(oracle::grid_best_premium(m, 1.113, 4000)).epsilon(1e-3));
  CHECK(br.is_interior);
  CHECK(br.stationarity_residual < 1e-6);
  CHECK(br.insurer_profit == doctest::Approx(profits(m, {1.113, br.premium}).insurer).epsilon(1e-12));
}

TEST_CASE("best response to a single atom prices at p x") {
  // Insurance is bought while p x > premium, so the premium approaches p x.
  const double p = 0.6, x = 2.0, r = 0.3;
  const auto m = PopulationMeasure::atoms({{p, x, 1}}, r);
  for (double theta : {2.5, 3.0, 3.9}) {
    REQUIRE(theta < p * x / r);
    const BestResponse br = best_response(m, theta, {});
    CHECK(br.premium == doctest::Approx(p * x).epsilon(1e-8));
    CHECK(br.insurer_profit == doctest::Approx(p * x - theta * r).epsilon(1e-8));
  }
}

TEST_CASE("best responses are interior for densities") {
  for (const auto& m : {beta_exp(2, 3), beta_exp(0.1, 2), beta_pareto(1.1)}) {
    for (double theta = 0.05; theta < 6; theta *= 1.5) {
      const BestResponse br = best_response(m, theta, {});
      REQUIRE(br.enters());
      CHECK(br.premium > theta * 0.3 + 1e-9);
      CHECK(br.premium < theta - 1e-9);
      CHECK(br.insurer_profit > 0);
      CHECK(br.insurer_profit == doctest::Approx(profits(m, {theta, br.premium}).insurer).epsilon(1e-8));
    }
  }
}

TEST_CASE("best response input checks and non-entry") {
  CHECK_THROWS_AS(best_response(beta_exp(2, 3), 0, {}), DomainError);
  CHECK_THROWS_AS(best_response(beta_exp(2, 3), -1, {}), DomainError);
  // Nobody has p above r, so no premium in the strip sells.
  const auto low = PopulationMeasure::product(Marginal::uniform(0, 0.15), Marginal::exponential(1), 0.3);
  const BestResponse br = best_response(low, 1.0, {});
  CHECK_FALSE(br.enters());
  CHECK(br.insurer_profit == 0.0);
}

TEST_CASE("subgame-perfect equilibrium of Beta(1,2) x Exp(1)") {
  const EquilibriumResult r = spne(beta_exp(1, 2), {});
  CHECK(r.kind == EquilibriumKind::kSubgamePerfect);
  CHECK(r.theta == doctest::Approx(1.088).epsilon(0.0006 / 1.088));
  CHECK(r.premium == doctest::Approx(0.553).epsilon(0.0006 / 0.553));
  CHECK(r.masses.a == doctest::Approx(0.105).epsilon(0.0006 / 0.105));
  CHECK(r.diagnostics.certified);
}

TEST_CASE("subgame-perfect prices of Beta(2,3) x Exp(1)") {
  const EquilibriumResult r = spne(beta_exp(2, 3), {});
  CHECK(r.theta == doctest::Approx(1.113).epsilon(0.0006 / 1.113));
  CHECK(r.premium == doctest::Approx(0.540).epsilon(0.0006 / 0.54));
  // The premium is the insurer's best response at the chosen price.
  CHECK(r.premium == doctest::Approx(best_response(beta_exp(2, 3), r.theta, {}).premium).epsilon(1e-12));
  CHECK(r.profits.insurer > 0);
  CHECK(r.diagnostics.stationarity_residual < 1e-6);
  CHECK_FALSE(r.candidates.empty());
}

TEST_CASE("subgame-perfect equilibrium matches exhaustive search") {
  struct Case {
    PopulationMeasure m;
    double lo, hi;
  };
  for (const auto& c : {Case{beta_exp(2, 3), 0.6, 1.8}, Case{beta_pareto(2), 0.5, 2.5},
                        Case{beta_pareto(1.1), 1.0, 3.0}}) {
    const EquilibriumResult r = spne(c.m, {});
    const Brute b = brute_spne(c.m, c.lo, c.hi, 400);
    CHECK(r.profits.producer >= b.value - 1e-9);
    CHECK(std::fabs(r.theta - b.theta) <= 2 * (c.hi - c.lo) / 400);
  }
}

TEST_CASE("Pareto(1,2): the producer sits at the bottom of the support") {
  const EquilibriumResult r = spne(beta_pareto(2), {});
  CHECK(r.theta == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.masses.o == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(r.profits.producer == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("heavy tails without a mean are flagged") {
  const EquilibriumResult r = spne(beta_pareto(0.9), {});
  CHECK_FALSE(r.diagnostics.certified);
  CHECK_FALSE(r.diagnostics.warnings.empty());
  CHECK(r.diagnostics.log_spaced);
  const EquilibriumResult ok = spne(beta_pareto(1.4), {});
  CHECK(ok.diagnostics.certified);
}

TEST_CASE("atomic populations must be smoothed first") {
  const auto atoms = PopulationMeasure::atoms({{0, 1, 0.5}, {1, 1.9, 0.5}}, 0.3);
  CHECK_THROWS_AS(spne(atoms, {}), PreconditionError);
  CHECK_THROWS_AS(dictatorial(atoms, {}), PreconditionError);
  try {
    spne(atoms, {});
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("smooth_atoms") != std::string::npos);
  }
  CHECK_NOTHROW(spne(smooth_atoms(atoms, 1e-3), {}));
}

TEST_CASE("no-insurer baseline") {
  const EquilibriumResult e = baseline(beta_exp(2, 2), {});
  CHECK(e.kind == EquilibriumKind::kNoInsuranceBaseline);
  CHECK(e.theta == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(e.profits.producer == doctest::Approx(0.3 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(std::isinf(e.premium));
  CHECK(e.masses.a == 0.0);
  for (double shape : {1.5, 3.0}) {
    const EquilibriumResult p = baseline(beta_pareto(shape), {});
    CHECK(p.theta == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p.profits.producer == doctest::Approx(0.3).epsilon(1e-6));
  }
  const auto smoothed = smooth_atoms(PopulationMeasure::atoms({{0, 1, 0.5}, {1, 1.9, 0.5}}, 0.3), 1e-3);
  CHECK(baseline(smoothed, {}).theta == doctest::Approx(1.0).epsilon(2e-3));
  // Exact atoms: the supremum is approached just below the lower atom.
  const auto atoms = PopulationMeasure::atoms({{0, 1, 0.5}, {1, 1.9, 0.5}}, 0.3);
  CHECK(baseline(atoms, {}).theta == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("dictatorial equilibrium of Beta(2,2) x Exp(1)") {
  const auto m = beta_exp(2, 2);
  const EquilibriumResult d = dictatorial(m, {});
  CHECK(d.kind == EquilibriumKind::kDictatorial);
  CHECK(std::fabs(d.theta - 1.328) <= 0.01);
  CHECK(std::fabs(d.premium - 0.707) <= 0.01);
  CHECK(std::fabs(d.profits.insurer - 0.051) <= 0.006);
  // Exhaustive search over the participation-feasible set near the optimum.
  double best = -1;
  for (double theta = 1.30; theta < 1.36; theta += 0.0005) {
    for (int j = 1; j < 2000; ++j) {
      const double premium = theta * (0.3 + 0.7 * j / 2000.0);
      const ProfitPair pr = profits(m, {theta, premium});
      if (pr.producer >= d.diagnostics.baseline_profit) best = std::max(best, pr.insurer);
    }
  }
  CHECK(d.profits.insurer >= best - 1e-7);
  CHECK(d.premium >= d.theta * 0.3);
  CHECK(d.premium < d.theta);
  CHECK(d.profits.producer >= d.diagnostics.baseline_profit - 1e-9);
  CHECK_FALSE(d.diagnostics.monotonicity_fallback);
}

TEST_CASE("dictatorial price falls below the subgame-perfect one for Beta(10,2)") {
  const auto m = beta_exp(10, 2);
  CHECK(dictatorial(m, {}).theta < spne(m, {}).theta);
}

TEST_CASE("dictatorial play with a 1% atom of sure patients") {
  // 0.99 at (p=0, psi=1) and 0.01 at (p=1, psi=2), r = 1/2, smoothed.
  const auto m = smooth_atoms(PopulationMeasure::atoms({{0, 1, 0.99}, {1, 2, 0.01}}, 0.5), 1e-3);
  const EquilibriumResult base = baseline(m, {});
  // Direct check: at the no-insurer price the producer keeps its profit for
  // any premium, and the insurer earns from the sure patients.
  const ProfitPair at_base = profits(m, {base.theta, 0.9});
  CHECK(at_base.producer >= base.profits.producer - 1e-12);
  CHECK(at_base.insurer > 0.003);
  const EquilibriumResult d = dictatorial(m, {});
  CHECK(d.kind == EquilibriumKind::kDictatorial);
  CHECK(d.profits.insurer >= at_base.insurer);
  CHECK(d.profits.producer >= base.profits.producer - 1e-9);
}

TEST_CASE("dictatorial falls back to the baseline when nobody insures") {
  const auto m = PopulationMeasure::product(Marginal::uniform(0, 0.15), Marginal::exponential(1), 0.3);
  const EquilibriumResult d = dictatorial(m, {});
  CHECK(d.kind == EquilibriumKind::kNoInsuranceBaseline);
  CHECK(d.theta == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(d.diagnostics.warnings.empty());
}

TEST_CASE("comparison with the no-insurer market") {
  const ComparisonReport c = compare(beta_exp(2, 3), {});
  CHECK(c.producer_gain >= 0);
  CHECK(c.baseline.profits.producer == doctest::Approx(0.3 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(c.price_effect == doctest::Approx(c.with_insurer.theta - c.baseline.theta));
  CHECK(c.access_effect == doctest::Approx(c.with_insurer.masses.treated() - c.baseline.masses.t));
  CHECK(c.insurer_profit == c.with_insurer.profits.insurer);

  const auto fewer = smooth_atoms(PopulationMeasure::atoms({{0, 1, 0.5}, {1, 1.9, 0.5}}, 0.3), 1e-3);
  CHECK(compare(fewer, {}).access_effect < 0);
  const auto cheaper = smooth_atoms(PopulationMeasure::atoms({{0, 1 / 0.3, 0.5}, {1, 1, 0.5}}, 0.3), 1e-3);
  CHECK(compare(cheaper, {}).price_effect < 0);
}

TEST_CASE("equilibrium set scan") {
  const auto m = beta_exp(2, 3);
  const EquilibriumResult s = spne(m, {});
  std::vector<double> grid = linear_grid(0.8, 1.6, 81);
  grid.push_back(s.theta);
  const auto points = kprime_scan(m, grid, {});
  REQUIRE_FALSE(points.empty());
  bool found = false;
  double best_insurer = 0;
  for (const auto& p : points) {
    found = found || (p.theta == s.theta && std::fabs(p.premium - s.premium) < 1e-12);
    best_insurer = std::max(best_insurer, p.profits.insurer);
    CHECK(p.profits.producer >= baseline(m, {}).profits.producer - 1e-9);
  }
  CHECK(found);
  CHECK(best_insurer >= s.profits.insurer);
  // The dictatorial program optimizes over a superset of these points.
  CHECK(dictatorial(m, {}).profits.insurer >= best_insurer - 1e-9);
}

TEST_CASE("rescaling psi rescales prices") {
  const EquilibriumResult one = spne(beta_exp(2, 3, 1.0), {});
  for (double lambda : {2.143, 5.0}) {
    const EquilibriumResult r = spne(beta_exp(2, 3, lambda), {});
    CHECK(r.theta * lambda == doctest::Approx(one.theta).epsilon(0.005));
    CHECK(r.premium * lambda == doctest::Approx(one.premium).epsilon(0.005));
    CHECK(r.masses.a == doctest::Approx(one.masses.a).epsilon(0.005));
    CHECK(r.masses.t == doctest::Approx(one.masses.t).epsilon(0.005));
  }
}

TEST_CASE("doubling the grids barely moves the solution") {
  SolverOptions fine;
  fine.price_grid = 1024;
  fine.premium_grid = 1024;
  for (const auto& m : {beta_exp(2, 3), beta_exp(0.5, 2), beta_pareto(1.4)}) {
    const EquilibriumResult a = spne(m, {});
    const EquilibriumResult b = spne(m, fine);
    CHECK(std::fabs(a.theta - b.theta) < 1e-4);
    CHECK(std::fabs(a.premium - b.premium) < 1e-4);
  }
}

TEST_CASE("threads do not change results") {
  SolverOptions many;
  many.threads = 4;
  for (const auto& m : {beta_exp(2, 3), beta_pareto(1.1)}) {
    const EquilibriumResult a = spne(m, {});
    const EquilibriumResult b = spne(m, many);
    CHECK(a.theta == b.theta);
    CHECK(a.premium == b.premium);
  }
  const EquilibriumResult a = dictatorial(beta_exp(3, 2), {});
  const EquilibriumResult b = dictatorial(beta_exp(3, 2), many);
  CHECK(a.theta == b.theta);
  CHECK(a.premium == b.premium);
}
