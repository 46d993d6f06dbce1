#include "hcdep/gp_sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>

#include <fftw3.h>
#include <Eigen/Dense>

#include "hcdep/errors.hpp"
#include "hcdep/format.hpp"
#include "hcdep/normal_kernel.hpp"
#include "hcdep/parallel.hpp"
#include "hcdep/rng.hpp"

namespace hcdep {

AutocovSpec::AutocovSpec(std::size_t n, double alpha, double alpha0)
    : n_(n), alpha_(alpha), alpha0_(alpha0) {
  if (n == 0) throw DomainError("AutocovSpec: n must be at least 1");
  if (!std::isfinite(alpha) || !(alpha > 0.0)) throw DomainError("AutocovSpec: alpha must be positive");
  if (!std::isfinite(alpha0) || !(alpha0 >= 0.0)) {
    throw DomainError("AutocovSpec: alpha0 must be non-negative");
  }
  const double nd = static_cast<double>(n);
  scale_ = std::pow(nd, -alpha0);
  // First lag with k^alpha >= n^alpha0. The small offset absorbs pow()
  // rounding when n^kappa is an integer.
  const double reach = std::pow(nd, kappa());
  const double capped = std::min(std::ceil(reach - 1e-9), 0x1.0p62);
  support_len_ = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(capped));
}

double AutocovSpec::effective_size() const noexcept {
  return std::pow(static_cast<double>(n_), 1.0 - kappa());
}

double rho(const AutocovSpec& spec, std::int64_t lag) {
  const std::uint64_t k = lag < 0 ? static_cast<std::uint64_t>(-(lag + 1)) + 1 : static_cast<std::uint64_t>(lag);
  if (k == 0) return 1.0;
  if (k >= spec.support_len()) return 0.0;
  return std::max(0.0, 1.0 - std::pow(static_cast<double>(k), spec.alpha()) * spec.scale());
}

std::vector<double> autocovariances(const AutocovSpec& spec, std::size_t count) {
  std::vector<double> c(count);
  for (std::size_t k = 0; k < count; ++k) c[k] = rho(spec, static_cast<std::int64_t>(k));
  return c;
}

// ---------------------------------------------------------------------------
// FFTW plumbing. Planning is not thread-safe in FFTW, execution with the
// new-array interface is; plans are created under a global lock.

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

class PathGenerator::Transform {
 public:
  explicit Transform(std::size_t m) : m_(m) {
    std::vector<std::complex<double>> in(m), out(m);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(m), reinterpret_cast<fftw_complex*>(in.data()),
                             reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan_ == nullptr) throw ResourceError("FFTW could not plan a transform of size " + std::to_string(m));
  }
  ~Transform() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  Transform(const Transform&) = delete;
  Transform& operator=(const Transform&) = delete;

  void forward(std::vector<std::complex<double>>& in, std::vector<std::complex<double>>& out) const {
    fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }
  std::size_t size() const noexcept { return m_; }

 private:
  std::size_t m_;
  fftw_plan plan_ = nullptr;
};

namespace {

std::size_t minimal_circulant_size(std::size_t n) {
  return std::bit_ceil(2 * (n - 1));
}

struct Spectrum {
  std::vector<double> eigenvalues;
  double imag_residue = 0.0;
};

Spectrum circulant_spectrum(const AutocovSpec& spec, std::size_t m) {
  // First row (c_0, ..., c_{m/2}, c_{m/2-1}, ..., c_1).
  std::vector<std::complex<double>> row(m), out(m);
  const std::size_t half = m / 2;
  for (std::size_t k = 0; k <= half; ++k) row[k] = rho(spec, static_cast<std::int64_t>(k));
  for (std::size_t k = half + 1; k < m; ++k) row[k] = row[m - k];
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(m), reinterpret_cast<fftw_complex*>(row.data()),
                            reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  if (plan == nullptr) throw ResourceError("FFTW could not plan a transform of size " + std::to_string(m));
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  Spectrum s;
  s.eigenvalues.resize(m);
  double mass = 0.0, imag = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    s.eigenvalues[j] = out[j].real();
    mass += std::abs(out[j].real());
    imag = std::max(imag, std::abs(out[j].imag()));
  }
  s.imag_residue = mass > 0.0 ? imag / mass : 0.0;
  return s;
}

}  // namespace

EmbeddingReport embed(const AutocovSpec& spec, const EmbeddingOptions& options) {
  EmbeddingReport report;
  if (spec.n() == 1) {
    report.eigenvalues = {1.0};
    return report;
  }
  std::size_t m = minimal_circulant_size(spec.n());
  for (int attempt = 0;; ++attempt, m *= 2) {
    if (m > options.max_m) {
      throw ResourceError("circulant embedding needs m = " + std::to_string(m) + ", above the cap of " +
                          std::to_string(options.max_m));
    }
    Spectrum s = circulant_spectrum(spec, m);
    const auto [lo, hi] = std::minmax_element(s.eigenvalues.begin(), s.eigenvalues.end());
    report.m = m;
    report.min_eigenvalue = *lo;
    report.max_eigenvalue = *hi;
    report.imag_residue = s.imag_residue;
    report.doublings = attempt;
    report.eigenvalues = std::move(s.eigenvalues);
    const bool acceptable = report.min_eigenvalue >= -options.negative_tolerance * report.max_eigenvalue;
    if (acceptable || attempt >= options.max_doublings) break;
  }
  report.clipped_mass = 0.0;
  report.spectral_mass = 0.0;
  for (double lambda : report.eigenvalues) {
    if (lambda < 0.0) {
      report.clipped_mass -= lambda;
    } else {
      report.spectral_mass += lambda;
    }
  }
  if (report.imag_residue > 1e-9) {
    throw InternalError("circulant embedding: transform of a symmetric row is not real");
  }
  report.exact = report.clipped_mass <= options.exact_tolerance * report.spectral_mass;
  return report;
}

// ---------------------------------------------------------------------------

PathGenerator::PathGenerator(const AutocovSpec& spec, const EmbeddingOptions& options)
    : spec_(spec), report_(embed(spec, options)) {
  const double m = static_cast<double>(report_.m);
  amplitudes_.resize(report_.m);
  for (std::size_t j = 0; j < report_.m; ++j) {
    amplitudes_[j] = std::sqrt(std::max(report_.eigenvalues[j], 0.0) / m);
  }
  if (report_.m > 1) transform_ = std::make_unique<Transform>(report_.m);
}

PathGenerator::~PathGenerator() = default;
PathGenerator::PathGenerator(PathGenerator&&) noexcept = default;
PathGenerator& PathGenerator::operator=(PathGenerator&&) noexcept = default;

std::pair<std::vector<double>, std::vector<double>> PathGenerator::pair(std::uint64_t master_seed,
                                                                        std::uint64_t pair_index) const {
  CounterStream stream(stream_key(master_seed, pair_index));
  const std::size_t n = spec_.n();
  if (report_.m == 1) {
    const double a = stream.next_normal();
    const double b = stream.next_normal();
    return {std::vector<double>{a}, std::vector<double>{b}};
  }
  const std::size_t m = report_.m;
  std::vector<std::complex<double>> z(m), w(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double re = stream.next_normal();
    const double im = stream.next_normal();
    z[j] = {amplitudes_[j] * re, amplitudes_[j] * im};
  }
  transform_->forward(z, w);
  std::pair<std::vector<double>, std::vector<double>> out;
  out.first.resize(n);
  out.second.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.first[i] = w[i].real();
    out.second[i] = w[i].imag();
  }
  return out;
}

std::vector<double> PathGenerator::path(std::uint64_t master_seed, std::uint64_t index) const {
  auto both = pair(master_seed, index / 2);
  return index % 2 == 0 ? std::move(both.first) : std::move(both.second);
}

std::vector<GaussianPath> simulate_paths(const AutocovSpec& spec, std::size_t count, std::uint64_t master_seed,
                                         unsigned threads) {
  if (count == 0) return {};
  const PathGenerator generator(spec);
  std::vector<GaussianPath> paths(count, GaussianPath{{}, spec, {}});
  const std::size_t pairs = (count + 1) / 2;
  parallel_for(pairs, threads, [&](std::size_t p) {
    auto [a, b] = generator.pair(master_seed, p);
    paths[2 * p] = GaussianPath{std::move(a), spec, {master_seed, 2 * p}};
    if (2 * p + 1 < count) paths[2 * p + 1] = GaussianPath{std::move(b), spec, {master_seed, 2 * p + 1}};
  });
  return paths;
}

std::vector<GaussianPath> simulate_cholesky(const AutocovSpec& spec, std::size_t count, std::uint64_t master_seed) {
  const std::size_t n = spec.n();
  if (n > kCholeskyMaxN) {
    throw ResourceError("simulate_cholesky: n = " + std::to_string(n) + " exceeds the dense bound " +
                        std::to_string(kCholeskyMaxN));
  }
  const auto c = autocovariances(spec, n);
  Eigen::MatrixXd sigma(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) sigma(i, j) = c[i > j ? i - j : j - i];
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
  if (ldlt.info() != Eigen::Success) throw InternalError("simulate_cholesky: factorisation failed");
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (d.minCoeff() < -1e-9 * dmax) {
    throw InternalError("simulate_cholesky: covariance matrix is not positive semidefinite (min pivot " +
                        format_double(d.minCoeff()) + ")");
  }
  const Eigen::VectorXd root = d.cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd lower = ldlt.matrixL();

  std::vector<GaussianPath> paths;
  paths.reserve(count);
  Eigen::VectorXd z(n);
  for (std::size_t j = 0; j < count; ++j) {
    CounterStream stream(stream_key(master_seed, j / 2), (j % 2) * n);
    for (std::size_t i = 0; i < n; ++i) z(i) = stream.next_normal();
    Eigen::VectorXd x = lower * root.cwiseProduct(z);
    x = ldlt.transpositionsP().transpose() * x;
    paths.push_back(GaussianPath{std::vector<double>(x.data(), x.data() + n), spec, {master_seed, j}});
  }
  return paths;
}

void write_paths_csv(std::ostream& out, std::span<const GaussianPath> paths) {
  if (!paths.empty()) {
    const auto& s = paths.front().spec;
    out << "# n=" << s.n() << " alpha=" << format_double(s.alpha()) << " alpha0=" << format_double(s.alpha0())
        << " seed=" << paths.front().seed_tag.master_seed << '\n';
  }
  for (const auto& p : paths) {
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      if (i) out << ',';
      out << format_double(p.values[i]);
    }
    out << '\n';
  }
}

std::vector<std::vector<double>> read_paths_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || !std::isfinite(v)) {
        throw DomainError("paths CSV line " + std::to_string(line_no) + ": cannot parse '" + cell + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace hcdep
