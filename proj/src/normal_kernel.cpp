#include "hcdep/normal_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "hcdep/errors.hpp"
#include "hcdep/rng.hpp"

namespace hcdep {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kQuadTolerance = 1e-13;
constexpr unsigned kQuadDepth = 15;

void require_finite(double t, const char* what) {
  if (!std::isfinite(t)) {
    throw DomainError(std::string(what) + ": argument must be finite");
  }
}

void require_open_probability(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError(std::string(what) + ": probability must lie in (0, 1)");
  }
}

void require_query(const BivariateTailQuery& q, const char* what) {
  require_finite(q.t, what);
  if (!(std::abs(q.rho) <= 1.0)) {
    throw DomainError(std::string(what) + ": correlation must lie in [-1, 1]");
  }
}

// Integrates phi(y) * g((t - rho*y)/s) over y in (t, inf), where g is Φ or Φ̄.
// The integrand changes on two scales: the conditional argument flips sign
// near y = t/rho over a width s/|rho|, and phi decays away from 0. Both are
// handed to the adaptive rule as breakpoints.
template <typename Kernel>
double conditional_integral(double t, double rho, Kernel kernel) {
  const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
  const double upper = std::max(t, 0.0) + 39.0;

  std::vector<double> cuts{t, upper};
  auto add_cut = [&](double y) {
    if (y > t && y < upper) cuts.push_back(y);
  };
  if (rho != 0.0) {
    const double centre = t / rho;
    const double width = s / std::abs(rho);
    add_cut(centre);
    for (double k : {1.0, 4.0, 16.0, 64.0}) {
      add_cut(centre - k * width);
      add_cut(centre + k * width);
    }
  }
  add_cut(0.0);
  for (double k : {1.0, 3.0, 8.0}) add_cut(t + k);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Each piece is mapped onto [-1, 1]: the rule's error estimate has an
  // absolute floor near eps * max|f|, which a narrow piece could never meet.
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    const double half = 0.5 * (cuts[i + 1] - cuts[i]);
    auto piece = [&](double u) {
      const double y = mid + half * u;
      return half * std_normal_pdf(y) * kernel((t - rho * y) / s);
    };
    total += Rule::integrate(piece, -1.0, 1.0, kQuadDepth, kQuadTolerance);
  }
  return total;
}

double sf_unchecked(double t) { return 0.5 * std::erfc(t * kInvSqrt2); }
double cdf_unchecked(double t) { return 0.5 * std::erfc(-t * kInvSqrt2); }

}  // namespace

double std_normal_pdf(double t) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return kInvSqrt2Pi * std::exp(-0.5 * t * t);
}

double std_normal_cdf(double t) {
  require_finite(t, "std_normal_cdf");
  return cdf_unchecked(t);
}

double std_normal_sf(double t) {
  require_finite(t, "std_normal_sf");
  return sf_unchecked(t);
}

double std_normal_quantile(double p) {
  require_open_probability(p, "std_normal_quantile");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double std_normal_survival_quantile(double p) {
  require_open_probability(p, "std_normal_survival_quantile");
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double bivariate_discordance(const BivariateTailQuery& q) {
  require_query(q, "bivariate_discordance");
  if (q.rho == 1.0) return 0.0;
  if (q.rho == -1.0) {
    // Y = -X: {X <= t, X < -t} = {X < -|t|}.
    return cdf_unchecked(-std::abs(q.t));
  }
  if (q.rho < 0.5) return sf_unchecked(q.t) - bivariate_exceedance(q);
  return conditional_integral(q.t, q.rho, cdf_unchecked);
}

double bivariate_exceedance(const BivariateTailQuery& q) {
  require_query(q, "bivariate_exceedance");
  if (q.rho == 1.0) return sf_unchecked(q.t);
  if (q.rho == -1.0) return q.t < 0.0 ? cdf_unchecked(-q.t) - cdf_unchecked(q.t) : 0.0;
  if (q.rho >= 0.5) return std::max(0.0, sf_unchecked(q.t) - bivariate_discordance(q));
  return conditional_integral(q.t, q.rho, sf_unchecked);
}

double conditional_exceedance_complement(const BivariateTailQuery& q) {
  require_query(q, "conditional_exceedance_complement");
  const double tail = sf_unchecked(q.t);
  if (tail <= 0.0) throw DomainError("conditional_exceedance_complement: P(Y > t) underflows");
  return bivariate_discordance(q) / tail;
}

double CounterStream::next_normal() { return std_normal_quantile(next_uniform()); }

std::uint64_t CounterStream::next_below(std::uint64_t bound) noexcept {
  const std::uint64_t limit = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = next_bits();
    if (x >= limit) return x % bound;
  }
}

}  // namespace hcdep
