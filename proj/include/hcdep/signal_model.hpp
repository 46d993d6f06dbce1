#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hcdep/gp_sim.hpp"

namespace hcdep {

/// Sparsity / strength pair (beta, r) with 1/2 < beta < 1 and 0 < r < 1.
class SignalSpec {
 public:
  SignalSpec(double beta, double r);
  double beta() const noexcept { return beta_; }
  double r() const noexcept { return r_; }

 private:
  double beta_;
  double r_;
};

/// Signal parameters after accounting for the effective sample size
/// N = n^(1-kappa).
struct DerivedSignalParams {
  std::size_t n = 0;
  double kappa = 0.0;
  double effective_size = 0.0;  ///< N
  double nu = 0.0;              ///< sqrt(2 r log N) = sqrt(2 r' log n)
  std::size_t count = 0;        ///< K = round(n^(1 - beta'))
  double beta_prime = 0.0;      ///< beta (1 - kappa)
  double r_prime = 0.0;         ///< r (1 - kappa)
  double xi = 0.0;              ///< (1 - beta)(1 - kappa)
};

/// Throws DegenerateRegimeError when kappa >= 1.
DerivedSignalParams derive_params(const AutocovSpec& acov, const SignalSpec& sig);

/// r*(beta): beta - 1/2 up to 3/4, (1 - sqrt(1 - beta))^2 beyond.
double detection_boundary(double beta);

struct BoundaryPoint {
  double kappa = 0.0;
  double beta = 0.0;
  double r = 0.0;
  double beta_prime = 0.0;
  double r_prime = 0.0;
};

struct BoundaryCurve {
  double kappa = 0.0;
  std::vector<BoundaryPoint> points;
  double reference_level = 1.0;  ///< r' = 1 - kappa
};

BoundaryCurve boundary_curve(double kappa, std::span<const double> beta_grid);

/// `count` interior points of (1/2, 1), evenly spaced and excluding the ends.
std::vector<double> default_beta_grid(std::size_t count = 199);

/// CSV with columns kappa,beta,r,beta_prime,r_prime. The reference line
/// r' = 1 - kappa of each curve is written as two rows with empty beta and r
/// spanning the curve's beta' range.
void write_boundary_csv(std::ostream& out, std::span<const BoundaryCurve> curves);

enum class Placement {
  kUniform,    ///< K uniform positions <n u_i>, duplicates collapse
  kBlockwise,  ///< whole blocks of length floor(n^kappa), N^(1-beta) of them
};

struct ContaminatedPath {
  std::vector<double> values;
  std::vector<std::uint8_t> indicator;
  SeedTag base_seed_tag;
  std::size_t realized_count = 0;
};

/// Adds `amplitude` at `count` positions placed as in the uniform scheme:
/// sorted uniforms u_1 < ... < u_K, index <n u_i> clamped to [1, n].
ContaminatedPath inject_uniform(const GaussianPath& path, std::size_t count, double amplitude,
                                std::uint64_t seed);

/// Uniform (default) or blockwise placement of params.count signals of size
/// params.nu. Throws DomainError if params were derived for another n.
ContaminatedPath inject_signals(const GaussianPath& path, const DerivedSignalParams& params, std::uint64_t seed,
                                Placement placement = Placement::kUniform);

enum class SignMode { kPlus, kMinus, kRandom };

/// Neighbor-difference experiment signal: amplitude 2 (r n^-alpha0 log n)^(1/2)
/// with r > 1, tested at constant C in [1, r).
class NddConfig {
 public:
  NddConfig(double r_ndd, double c, SignMode sign = SignMode::kPlus);
  double r_ndd() const noexcept { return r_; }
  double c() const noexcept { return c_; }
  SignMode sign() const noexcept { return sign_; }

 private:
  double r_;
  double c_;
  SignMode sign_;
};

double ndd_amplitude(const AutocovSpec& spec, double r_ndd);

/// Adds ±amplitude at the given 0-based sites (deduplicated). Requires
/// 1 <= |sites| <= n - 1. `seed` is used only for SignMode::kRandom.
ContaminatedPath inject_ndd_signal(const GaussianPath& path, const NddConfig& cfg,
                                   std::span<const std::size_t> sites, std::uint64_t seed = 0);

}  // namespace hcdep
