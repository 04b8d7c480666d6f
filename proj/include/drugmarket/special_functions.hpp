#pragma once

namespace drugmarket::special {

/// log B(a, b) for a, b > 0.
double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b), evaluated by the modified Lentz
/// continued fraction with relative tolerance 1e-12 (uses the symmetry
/// I_x(a,b) = 1 - I_{1-x}(b,a) to stay in the fast-converging region).
double incomplete_beta(double a, double b, double x);

}  // namespace drugmarket::special
