#pragma once

// Standard-normal primitives: Φ, Φ̄ = 1 − Φ, their inverses, and the
// equal-level bivariate orthant probability P(X > t, Y > t).

namespace hcdep {

/// Equal-level bivariate tail query for a unit-variance normal pair with
/// correlation rho.
struct BivariateTailQuery {
  double t = 0.0;
  double rho = 0.0;
};

double std_normal_pdf(double t);

/// Φ(t). Throws DomainError for non-finite t.
double std_normal_cdf(double t);

/// Φ̄(t) = 1 − Φ(t), evaluated without cancellation (relative accuracy
/// holds far into the upper tail).
double std_normal_sf(double t);

/// Φ^{-1}(p) for p in (0, 1).
double std_normal_quantile(double p);

/// Φ̄^{-1}(p) for p in (0, 1); accurate for tiny p, where
/// -std_normal_quantile(p) would lose digits near p -> 0 on the upper side.
double std_normal_survival_quantile(double p);

/// P(X > t, Y > t). Absolute error below 1e-10 (relative accuracy ~1e-12
/// in practice) via adaptive quadrature of Φ̄((t − ρy)/√(1−ρ²)) φ(y).
double bivariate_exceedance(const BivariateTailQuery& q);

/// P(X <= t, Y > t), computed directly (not as Φ̄(t) minus the orthant
/// probability) so that it stays relatively accurate as rho -> 1.
double bivariate_discordance(const BivariateTailQuery& q);

/// 1 − P(X > t | Y > t) = P(X <= t, Y > t) / Φ̄(t).
double conditional_exceedance_complement(const BivariateTailQuery& q);

}  // namespace hcdep
