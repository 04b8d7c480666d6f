#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace drugmarket {

/// Seeded random stream. One per caller; parallel work uses independently
/// seeded streams.
using Rng = std::mt19937_64;

/// Uniform draw in (0, 1) built from the top 53 bits of the stream, so that
/// sequences are identical across standard library implementations.
double uniform_open01(Rng& rng);

struct BetaParams {
  double s1;
  double s2;
};
struct ExponentialParams {
  double rate;
};
struct ParetoParams {
  double scale;
  double shape;
};
struct UniformParams {
  double lo;
  double hi;
};
struct Atom {
  double location;
  double weight;
};

/// One-dimensional distribution used for either coordinate of the agent
/// characteristics. Immutable once built; the factories validate parameters.
class Marginal {
 public:
  using Kind = std::variant<BetaParams, ExponentialParams, ParetoParams, UniformParams,
                            std::vector<Atom>>;

  static Marginal beta(double s1, double s2);
  static Marginal exponential(double rate);
  static Marginal pareto(double scale, double shape);
  static Marginal uniform(double lo, double hi);
  /// Atoms with equal locations are merged; weights must sum to 1 within 1e-12.
  static Marginal atoms(std::vector<Atom> atoms);

  const Kind& kind() const { return kind_; }
  bool is_atomic() const { return std::holds_alternative<std::vector<Atom>>(kind_); }
  bool has_density() const { return !is_atomic(); }

  /// P[X <= x].
  double cdf(double x) const;
  /// P[X > x]; strict tail, which matters only for atoms.
  double survival(double x) const;
  /// Lebesgue density; 0 for atomic marginals.
  double density(double x) const;
  /// inf{x : cdf(x) >= q}. q must be in [0,1), or [0,1] for bounded support.
  double quantile(double q) const;
  std::vector<double> sample(Rng& rng, std::size_t n) const;
  double sample_one(Rng& rng) const;

  double support_lower() const;
  double support_upper() const;  // +inf for unbounded support
  bool bounded() const;
  /// Points where the density jumps or the cdf has a kink.
  std::vector<double> breakpoints() const;
  /// Positive length scale: mean for light tails, the median otherwise.
  double scale() const;
  bool finite_mean() const;
  bool heavy_tailed() const;
  double mean() const;

  std::string describe() const;

 private:
  explicit Marginal(Kind kind);
  double beta_quantile(double q) const;

  Kind kind_;
  double log_norm_ = 0.0;  // log B(s1, s2) for Beta
};

/// A point mass in the (p, psi) plane.
struct PlanarAtom {
  double p;
  double psi;
  double weight;
};

/// Uniform mass on the rectangle [p_lo, p_hi] x [psi_lo, psi_hi].
struct UniformPatch {
  double p_lo;
  double p_hi;
  double psi_lo;
  double psi_hi;
  double weight;
};

struct ProductForm {
  Marginal p;
  Marginal psi;
};

/// Distribution of the agents' (p, psi) characteristics together with the
/// incidence rate r, which is common to every agent.
class PopulationMeasure {
 public:
  using Form = std::variant<ProductForm, std::vector<PlanarAtom>, std::vector<UniformPatch>>;

  static PopulationMeasure product(Marginal p, Marginal psi, double incidence);
  static PopulationMeasure atoms(std::vector<PlanarAtom> atoms, double incidence);
  static PopulationMeasure patches(std::vector<UniformPatch> patches, double incidence);

  const Form& form() const { return form_; }
  double incidence() const { return incidence_; }

  bool is_product() const { return std::holds_alternative<ProductForm>(form_); }
  bool is_atomic() const { return std::holds_alternative<std::vector<PlanarAtom>>(form_); }
  bool is_patches() const { return std::holds_alternative<std::vector<UniformPatch>>(form_); }
  const ProductForm& product_form() const { return std::get<ProductForm>(form_); }
  const std::vector<PlanarAtom>& planar_atoms() const {
    return std::get<std::vector<PlanarAtom>>(form_);
  }
  const std::vector<UniformPatch>& uniform_patches() const {
    return std::get<std::vector<UniformPatch>>(form_);
  }

  /// True when the measure is absolutely continuous in the plane.
  bool has_density() const;
  /// Mass of {psi > 0}; must be positive for the pricing game to be non-trivial.
  double profit_potential() const;
  bool psi_finite_mean() const;
  bool psi_heavy_tailed() const;

  /// P[psi > x] under the psi-marginal.
  double psi_survival(double x) const;
  double psi_quantile(double q) const;
  double psi_scale() const;
  double psi_upper() const;

  /// One draw of (p, psi).
  std::pair<double, double> sample_one(Rng& rng) const;

  PopulationMeasure with_incidence(double incidence) const;
  std::string describe() const;

 private:
  PopulationMeasure(Form form, double incidence);
  Form form_;
  double incidence_;
};

/// Replaces each planar atom by a uniform mass on the square of half-side
/// `radius` around it, clipped to [0,1] x [0, inf). Weights are preserved.
PopulationMeasure smooth_atoms(const PopulationMeasure& measure, double radius);

}  // namespace drugmarket
