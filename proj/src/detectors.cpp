#include "hcdep/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hcdep/errors.hpp"
#include "hcdep/format.hpp"
#include "hcdep/normal_kernel.hpp"

namespace hcdep {

HCGrid default_grid(const AutocovSpec& spec, std::size_t resolution, HcMode mode) {
  const double kappa = spec.kappa();
  if (!(kappa < 1.0)) {
    throw DegenerateRegimeError("higher criticism needs kappa < 1 (kappa = " + format_double(kappa) +
                                " leaves a single effective observation)");
  }
  if (spec.n() < 2) throw DomainError("default_grid: n must be at least 2");
  HCGrid grid;
  grid.kappa = kappa;
  grid.mode = mode;
  grid.t_n = std_normal_survival_quantile(std::pow(static_cast<double>(spec.n()), kappa - 1.0));
  if (resolution == 1) {
    grid.refinement = {0.0};
  } else if (resolution >= 2) {
    grid.refinement.resize(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
      grid.refinement[i] = -grid.t_n + 2.0 * grid.t_n * static_cast<double>(i) / static_cast<double>(resolution - 1);
    }
  }
  return grid;
}

HCGrid explicit_grid(std::vector<double> levels, double t_n, double kappa, HcMode mode) {
  if (!(t_n > 0.0) || !std::isfinite(t_n)) throw DomainError("explicit_grid: t_n must be positive");
  std::sort(levels.begin(), levels.end());
  return HCGrid{t_n, kappa, mode, std::move(levels), false};
}

namespace {

// Returns NaN where the normalisation vanishes.
double standardized_excess(double count, double n, double t) {
  const double tail = std_normal_sf(t);
  const double body = std_normal_cdf(t);
  const double denom = std::sqrt(n * body * tail);
  if (!(denom > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return (count - n * tail) / denom;
}

}  // namespace

double hc_objective(std::span<const double> data, double t) {
  const auto above = std::count_if(data.begin(), data.end(), [t](double x) { return x > t; });
  return standardized_excess(static_cast<double>(above), static_cast<double>(data.size()), t);
}

HCResult hc_statistic(std::span<const double> data, const HCGrid& grid) {
  if (data.empty()) throw DomainError("hc_statistic: empty data");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double nd = static_cast<double>(n);

  double best = -std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  bool any = false;
  auto consider = [&](double count, double t) {
    double z = standardized_excess(count, nd, t);
    if (std::isnan(z)) return;
    if (grid.mode == HcMode::kAbsolute) z = std::abs(z);
    any = true;
    if (z > best) {
      best = z;
      best_t = t;
    }
  };

  for (double t : grid.refinement) {
    if (t < -grid.t_n || t > grid.t_n) continue;
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
    consider(static_cast<double>(above), t);
  }
  if (grid.use_data_levels) {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j < n && sorted[j] == sorted[i]) ++j;
      const double x = sorted[i];
      if (x > -grid.t_n && x < grid.t_n) {
        consider(static_cast<double>(n - j), x);  // count of X > x
        consider(static_cast<double>(n - i), x);  // count of X >= x
      }
      i = j;
    }
  }
  if (!any) throw EmptyGridError("hc_statistic: no candidate level lies inside [-t_n, t_n]");

  HCResult r;
  r.hc = best;
  r.hc_normalized = std::pow(nd, -grid.kappa / 2.0) * best;
  r.argmax_t = best_t;
  r.mode = grid.mode;
  return r;
}

nlohmann::json to_json(const DetectorRecord& r) {
  nlohmann::json j{{"detector", r.detector},     {"statistic", r.statistic}, {"normalized", r.normalized},
                   {"threshold", r.threshold},   {"decision", r.decision ? "signal" : "no-signal"}};
  if (r.argmax_t) j["argmax_t"] = *r.argmax_t;
  return j;
}

DetectorRecord hc_detect(std::span<const double> data, const HCGrid& grid, double threshold) {
  const HCResult res = hc_statistic(data, grid);
  return DetectorRecord{"hc", res.hc, res.hc_normalized, threshold, res.hc_normalized >= threshold, res.argmax_t};
}

DetectorRecord max_classifier(std::span<const double> data) {
  if (data.empty()) throw DomainError("max_classifier: empty data");
  const double max = *std::max_element(data.begin(), data.end());
  const double threshold = std::sqrt(2.0 * std::log(static_cast<double>(data.size())));
  return DetectorRecord{"max", max, max - threshold, threshold, max > threshold, std::nullopt};
}

DetectorRecord ndd_detect(std::span<const double> data, double alpha0, double c) {
  if (data.size() < 2) throw DomainError("ndd_detect: need at least two observations");
  if (!(c >= 1.0) || !std::isfinite(c)) throw DomainError("ndd_detect: C must be at least 1");
  if (!(alpha0 >= 0.0) || !std::isfinite(alpha0)) throw DomainError("ndd_detect: alpha0 must be non-negative");
  const double n = static_cast<double>(data.size());
  const double unit = std::pow(n, -alpha0) * std::log(n);
  double max_diff = 0.0;
  for (std::size_t i = 0; i + 1 < data.size(); ++i) max_diff = std::max(max_diff, std::abs(data[i + 1] - data[i]));
  const double threshold = 2.0 * std::sqrt(c * unit);
  return DetectorRecord{"ndd", max_diff, max_diff * max_diff / (4.0 * unit), threshold, max_diff > threshold,
                        std::nullopt};
}

BlockPartition::BlockPartition(std::size_t n, std::size_t block_len, std::optional<double> lambda)
    : n_(n), block_len_(block_len), lambda_(lambda) {
  for (std::size_t s = 0; s < n; s += block_len) starts_.push_back(s);
}

BlockPartition BlockPartition::from_exponent(const AutocovSpec& spec, double lambda) {
  if (!(lambda > 0.0 && lambda < spec.kappa())) throw DomainError("block exponent lambda must lie in (0, kappa)");
  const double len = std::floor(std::pow(static_cast<double>(spec.n()), lambda) + 1e-9);
  return BlockPartition(spec.n(), std::max<std::size_t>(1, static_cast<std::size_t>(len)), lambda);
}

BlockPartition BlockPartition::from_length(std::size_t n, std::size_t block_len) {
  if (n == 0 || block_len == 0) throw DomainError("BlockPartition: n and block length must be positive");
  return BlockPartition(n, block_len, std::nullopt);
}

BlockConstancy block_constancy(std::span<const double> data, double t, const BlockPartition& part) {
  if (data.size() != part.n()) throw DomainError("block_constancy: partition built for a different n");
  BlockConstancy out;
  out.per_block.reserve(part.count());
  double total = 0.0, conditional = 0.0;
  for (std::size_t s : part.starts()) {
    const std::size_t stop = std::min(part.n(), s + part.block_len());
    const bool head = data[s] > t;
    std::size_t agree = 0;
    for (std::size_t i = s; i < stop; ++i) agree += (data[i] > t) == head;
    const double frac = static_cast<double>(agree) / static_cast<double>(stop - s);
    if (agree != stop - s) out.constant = false;
    out.per_block.push_back(frac);
    total += frac;
    if (head) {
      ++out.conditioned_blocks;
      conditional += frac;
    }
  }
  out.agreement = total / static_cast<double>(part.count());
  out.conditional_agreement = out.conditioned_blocks ? conditional / static_cast<double>(out.conditioned_blocks) : 0.0;
  return out;
}

LevelSpec::LevelSpec(double q, std::size_t n) : q_(q) {
  if (!(q > 0.0) || !std::isfinite(q)) throw DomainError("level exponent q must be positive");
  if (n == 0) throw DomainError("LevelSpec: n must be positive");
  t_ = std::sqrt(2.0 * q * std::log(static_cast<double>(n)));
}

bool level_exceedance(std::span<const double> data, const LevelSpec& level) {
  return std::any_of(data.begin(), data.end(), [&](double x) { return x > level.t(); });
}

}  // namespace hcdep
