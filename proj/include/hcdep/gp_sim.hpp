#pragma once

// Stationary zero-mean Gaussian process with autocovariance
//
//   rho_n(k) = max(0, 1 - |k|^alpha * n^(-alpha0)),
//
// simulated exactly by circulant embedding, plus a dense-factorisation
// oracle for small n.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace hcdep {

class AutocovSpec {
 public:
  /// Throws DomainError unless n >= 1, alpha > 0, alpha0 >= 0 (all finite).
  /// alpha0 = 0 is the independent case.
  AutocovSpec(std::size_t n, double alpha, double alpha0);

  std::size_t n() const noexcept { return n_; }
  double alpha() const noexcept { return alpha_; }
  double alpha0() const noexcept { return alpha0_; }
  double kappa() const noexcept { return alpha0_ / alpha_; }

  /// Smallest lag with zero covariance, i.e. ceil(n^kappa).
  std::uint64_t support_len() const noexcept { return support_len_; }

  /// n^(1 - kappa); meaningful for kappa < 1.
  double effective_size() const noexcept;

  /// n^(-alpha0).
  double scale() const noexcept { return scale_; }

  friend bool operator==(const AutocovSpec&, const AutocovSpec&) = default;

 private:
  std::size_t n_;
  double alpha_;
  double alpha0_;
  double scale_;
  std::uint64_t support_len_;
};

double rho(const AutocovSpec& spec, std::int64_t lag);

/// Covariances rho(spec, 0..count-1).
std::vector<double> autocovariances(const AutocovSpec& spec, std::size_t count);

struct EmbeddingReport {
  std::size_t m = 1;                  ///< circulant size
  std::vector<double> eigenvalues;    ///< before clipping
  double min_eigenvalue = 1.0;        ///< before clipping
  double max_eigenvalue = 1.0;
  double clipped_mass = 0.0;          ///< sum of |negative eigenvalues| zeroed
  double spectral_mass = 1.0;         ///< sum of eigenvalues after clipping
  double imag_residue = 0.0;          ///< max |Im| of the transform / spectral mass
  int doublings = 0;
  bool exact = true;                  ///< clipped_mass / spectral_mass <= 1e-6
};

struct EmbeddingOptions {
  int max_doublings = 3;                   ///< m may grow to 8x its minimal size
  std::size_t max_m = std::size_t{1} << 26;
  double negative_tolerance = 1e-9;        ///< relative to the largest eigenvalue
  double exact_tolerance = 1e-6;           ///< clipped_mass / spectral_mass
};

/// Builds the circulant embedding of the covariance. Throws ResourceError
/// when the required m exceeds options.max_m.
EmbeddingReport embed(const AutocovSpec& spec, const EmbeddingOptions& options = {});

struct SeedTag {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate_index = 0;
  friend bool operator==(const SeedTag&, const SeedTag&) = default;
};

struct GaussianPath {
  std::vector<double> values;
  AutocovSpec spec;
  SeedTag seed_tag;
};

/// Reusable sampler: one embedding, any number of paths. Thread-safe for
/// concurrent calls to the const members.
class PathGenerator {
 public:
  explicit PathGenerator(const AutocovSpec& spec, const EmbeddingOptions& options = {});
  ~PathGenerator();
  PathGenerator(PathGenerator&&) noexcept;
  PathGenerator& operator=(PathGenerator&&) noexcept;

  const AutocovSpec& spec() const noexcept { return spec_; }
  const EmbeddingReport& report() const noexcept { return report_; }

  /// Both paths of one transform: replicate indices 2*pair and 2*pair+1.
  std::pair<std::vector<double>, std::vector<double>> pair(std::uint64_t master_seed,
                                                           std::uint64_t pair_index) const;

  /// Path number `index` (real part of pair index/2 when even, imaginary
  /// part when odd).
  std::vector<double> path(std::uint64_t master_seed, std::uint64_t index) const;

 private:
  class Transform;
  AutocovSpec spec_;
  EmbeddingReport report_;
  std::vector<double> amplitudes_;  // sqrt(max(lambda,0) / m)
  std::unique_ptr<Transform> transform_;
};

/// `count` paths, replicate indices 0..count-1. Deterministic in
/// (spec, count, master_seed); `threads` (0 = hardware) cannot change output.
std::vector<GaussianPath> simulate_paths(const AutocovSpec& spec, std::size_t count,
                                         std::uint64_t master_seed, unsigned threads = 0);

/// Dense-factorisation oracle, n <= 2048. Throws ResourceError above the
/// bound and InternalError if the covariance matrix is not PSD (it is not
/// for alpha > 1 and large n/n^kappa).
std::vector<GaussianPath> simulate_cholesky(const AutocovSpec& spec, std::size_t count,
                                            std::uint64_t master_seed);

inline constexpr std::size_t kCholeskyMaxN = 2048;

/// CSV with header `# n=<n> alpha=<a> alpha0=<a0> seed=<s>` and one row per
/// path. Doubles are written in shortest round-trip form.
void write_paths_csv(std::ostream& out, std::span<const GaussianPath> paths);

/// Parses rows written by write_paths_csv (comment lines are skipped).
std::vector<std::vector<double>> read_paths_csv(std::istream& in);

}  // namespace hcdep
