#include "hcdep/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "hcdep/errors.hpp"
#include "hcdep/format.hpp"
#include "hcdep/rng.hpp"

namespace hcdep {

SignalSpec::SignalSpec(double beta, double r) : beta_(beta), r_(r) {
  if (!(beta > 0.5 && beta < 1.0)) throw DomainError("beta must lie in (1/2, 1)");
  if (!(r > 0.0 && r < 1.0)) throw DomainError("r must lie in (0, 1)");
}

DerivedSignalParams derive_params(const AutocovSpec& acov, const SignalSpec& sig) {
  const double kappa = acov.kappa();
  if (!(kappa < 1.0)) {
    throw DegenerateRegimeError("signal parameters need kappa < 1 (kappa = " + format_double(kappa) +
                                " is the degenerate regime)");
  }
  const double n = static_cast<double>(acov.n());
  DerivedSignalParams p;
  p.n = acov.n();
  p.kappa = kappa;
  p.effective_size = acov.effective_size();
  p.beta_prime = sig.beta() * (1.0 - kappa);
  p.r_prime = sig.r() * (1.0 - kappa);
  p.xi = (1.0 - sig.beta()) * (1.0 - kappa);
  p.count = static_cast<std::size_t>(std::llround(std::pow(n, 1.0 - p.beta_prime)));
  const double log_big_n = (1.0 - kappa) * std::log(n);
  p.nu = std::sqrt(2.0 * sig.r() * log_big_n);
  const double via_prime = std::sqrt(2.0 * p.r_prime * std::log(n));
  if (std::abs(via_prime - p.nu) > 1e-12 * std::max(1.0, p.nu)) {
    throw InternalError("derive_params: sqrt(2 r' log n) != sqrt(2 r log N)");
  }
  return p;
}

double detection_boundary(double beta) {
  if (!(beta > 0.5 && beta < 1.0)) throw DomainError("beta must lie in (1/2, 1)");
  if (beta <= 0.75) return beta - 0.5;
  const double s = 1.0 - std::sqrt(1.0 - beta);
  return s * s;
}

BoundaryCurve boundary_curve(double kappa, std::span<const double> beta_grid) {
  if (!(kappa >= 0.0 && kappa < 1.0)) throw DomainError("kappa must lie in [0, 1)");
  BoundaryCurve curve;
  curve.kappa = kappa;
  curve.reference_level = 1.0 - kappa;
  curve.points.reserve(beta_grid.size());
  for (double beta : beta_grid) {
    const double r = detection_boundary(beta);
    curve.points.push_back({kappa, beta, r, (1.0 - kappa) * beta, (1.0 - kappa) * r});
  }
  return curve;
}

std::vector<double> default_beta_grid(std::size_t count) {
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = 0.5 + 0.5 * static_cast<double>(i + 1) / static_cast<double>(count + 1);
  }
  return grid;
}

void write_boundary_csv(std::ostream& out, std::span<const BoundaryCurve> curves) {
  out << "kappa,beta,r,beta_prime,r_prime\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out << format_double(p.kappa) << ',' << format_double(p.beta) << ',' << format_double(p.r) << ','
          << format_double(p.beta_prime) << ',' << format_double(p.r_prime) << '\n';
    }
    for (double b : {0.5, 1.0}) {
      out << format_double(c.kappa) << ",,," << format_double((1.0 - c.kappa) * b) << ','
          << format_double(c.reference_level) << '\n';
    }
  }
}

namespace {

ContaminatedPath unmarked(const GaussianPath& path) {
  return ContaminatedPath{path.values, std::vector<std::uint8_t>(path.values.size(), 0), path.seed_tag, 0};
}

void apply(ContaminatedPath& out, double amplitude) {
  std::size_t marked = 0;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (out.indicator[i]) {
      out.values[i] += amplitude;
      ++marked;
    }
  }
  out.realized_count = marked;
}

}  // namespace

ContaminatedPath inject_uniform(const GaussianPath& path, std::size_t count, double amplitude, std::uint64_t seed) {
  ContaminatedPath out = unmarked(path);
  const std::size_t n = path.values.size();
  if (n == 0 || count == 0) return out;
  CounterStream stream(stream_key(seed, 0, StreamDomain::kSignals));
  std::vector<double> u(count);
  for (auto& x : u) x = stream.next_uniform();
  std::sort(u.begin(), u.end());
  const auto nd = static_cast<double>(n);
  for (double x : u) {
    const long long pos = std::clamp<long long>(std::llround(nd * x), 1, static_cast<long long>(n));
    out.indicator[static_cast<std::size_t>(pos - 1)] = 1;
  }
  apply(out, amplitude);
  return out;
}

ContaminatedPath inject_signals(const GaussianPath& path, const DerivedSignalParams& params, std::uint64_t seed,
                                Placement placement) {
  if (params.n != path.values.size() || params.n != path.spec.n() ||
      std::abs(params.kappa - path.spec.kappa()) > 1e-12) {
    throw DomainError("inject_signals: parameters were derived for a different series");
  }
  if (placement == Placement::kUniform) return inject_uniform(path, params.count, params.nu, seed);

  ContaminatedPath out = unmarked(path);
  const std::size_t n = params.n;
  const double nd = static_cast<double>(n);
  const auto block_len = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::pow(nd, params.kappa) + 1e-9)));
  const std::size_t blocks = (n + block_len - 1) / block_len;
  const auto wanted = static_cast<std::size_t>(std::llround(std::pow(nd, params.xi)));
  const std::size_t chosen = std::min(blocks, wanted);
  std::vector<std::size_t> order(blocks);
  std::iota(order.begin(), order.end(), 0);
  CounterStream stream(stream_key(seed, 0, StreamDomain::kSignals));
  for (std::size_t i = 0; i < chosen; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(stream.next_below(blocks - i));
    std::swap(order[i], order[j]);
    const std::size_t start = order[i] * block_len;
    const std::size_t stop = std::min(n, start + block_len);
    for (std::size_t k = start; k < stop; ++k) out.indicator[k] = 1;
  }
  apply(out, params.nu);
  return out;
}

NddConfig::NddConfig(double r_ndd, double c, SignMode sign) : r_(r_ndd), c_(c), sign_(sign) {
  if (!(r_ndd > 1.0) || !std::isfinite(r_ndd)) throw DomainError("r_ndd must exceed 1");
  if (!(c >= 1.0 && c < r_ndd)) throw DomainError("C must satisfy 1 <= C < r_ndd");
}

double ndd_amplitude(const AutocovSpec& spec, double r_ndd) {
  return 2.0 * std::sqrt(r_ndd * spec.scale() * std::log(static_cast<double>(spec.n())));
}

ContaminatedPath inject_ndd_signal(const GaussianPath& path, const NddConfig& cfg, std::span<const std::size_t> sites,
                                   std::uint64_t seed) {
  const std::size_t n = path.values.size();
  std::vector<std::size_t> unique(sites.begin(), sites.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (unique.empty() || unique.size() + 1 > n) {
    throw DomainError("inject_ndd_signal: the signal must occupy between 1 and n - 1 sites");
  }
  if (unique.back() >= n) throw DomainError("inject_ndd_signal: site index out of range");

  ContaminatedPath out = unmarked(path);
  const double amplitude = ndd_amplitude(path.spec, cfg.r_ndd());
  CounterStream stream(stream_key(seed, 1, StreamDomain::kSignals));
  for (std::size_t site : unique) {
    double sign = 1.0;
    switch (cfg.sign()) {
      case SignMode::kPlus: sign = 1.0; break;
      case SignMode::kMinus: sign = -1.0; break;
      case SignMode::kRandom: sign = (stream.next_bits() >> 63) ? 1.0 : -1.0; break;
    }
    out.indicator[site] = 1;
    out.values[site] += sign * amplitude;
  }
  out.realized_count = unique.size();
  return out;
}

}  // namespace hcdep
