#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcdep/gp_sim.hpp"

namespace hcdep {

enum class HcMode { kSigned, kAbsolute };

/// Candidate levels for the higher-criticism supremum.
///
/// The statistic is evaluated at every refinement level in [-t_n, t_n] and,
/// when `use_data_levels` is set, on both sides of every data value strictly
/// inside (-t_n, t_n): once counting X > x and once counting X >= x. The
/// numerator is a step function, so those one-sided limits are where the
/// jumps of the supremum occur.
struct HCGrid {
  double t_n = 0.0;
  double kappa = 0.0;  ///< for the normalisation n^(-kappa/2)
  HcMode mode = HcMode::kSigned;
  std::vector<double> refinement;
  bool use_data_levels = true;
};

inline constexpr std::size_t kDefaultRefinement = 512;

/// t_n = Φ̄^{-1}(n^(kappa-1)) and a uniform refinement of `resolution`
/// points on [-t_n, t_n]. Throws DegenerateRegimeError when kappa >= 1.
HCGrid default_grid(const AutocovSpec& spec, std::size_t resolution = kDefaultRefinement,
                    HcMode mode = HcMode::kSigned);

/// Fixed candidate set, no data levels.
HCGrid explicit_grid(std::vector<double> levels, double t_n, double kappa = 0.0,
                     HcMode mode = HcMode::kSigned);

struct HCResult {
  double hc = 0.0;
  double hc_normalized = 0.0;  ///< n^(-kappa/2) hc
  double argmax_t = 0.0;
  HcMode mode = HcMode::kSigned;
};

/// Z(t) = sum_i {1[X_i > t] - Φ̄(t)} / sqrt(n Φ(t) Φ̄(t)).
double hc_objective(std::span<const double> data, double t);

HCResult hc_statistic(std::span<const double> data, const HCGrid& grid);

/// Detector output, one JSON record per evaluation.
struct DetectorRecord {
  std::string detector;
  double statistic = 0.0;
  double normalized = 0.0;
  double threshold = 0.0;
  bool decision = false;  ///< true = signal
  std::optional<double> argmax_t;
};

nlohmann::json to_json(const DetectorRecord& r);

/// HC as a detector: signal iff hc_normalized >= threshold.
DetectorRecord hc_detect(std::span<const double> data, const HCGrid& grid, double threshold);

/// Signal iff max(data) > sqrt(2 log n). `normalized` = max - sqrt(2 log n).
DetectorRecord max_classifier(std::span<const double> data);

/// Signal iff max_i |Y_{i+1} - Y_i| > 2 (C n^-alpha0 log n)^(1/2).
/// `normalized` = (max|Δ|)^2 / (4 n^-alpha0 log n), so the rule is
/// normalized > C.
DetectorRecord ndd_detect(std::span<const double> data, double alpha0, double c);

/// Consecutive blocks B_1..B_b: the first b-1 of length block_len, the last
/// of length 1..block_len.
class BlockPartition {
 public:
  /// block_len = floor(n^lambda); requires 0 < lambda < spec.kappa().
  static BlockPartition from_exponent(const AutocovSpec& spec, double lambda);
  static BlockPartition from_length(std::size_t n, std::size_t block_len);

  std::size_t n() const noexcept { return n_; }
  std::size_t block_len() const noexcept { return block_len_; }
  std::size_t count() const noexcept { return starts_.size(); }
  const std::vector<std::size_t>& starts() const noexcept { return starts_; }  ///< 0-based s_j
  std::optional<double> lambda() const noexcept { return lambda_; }

 private:
  BlockPartition(std::size_t n, std::size_t block_len, std::optional<double> lambda);
  std::size_t n_;
  std::size_t block_len_;
  std::optional<double> lambda_;
  std::vector<std::size_t> starts_;
};

struct BlockConstancy {
  bool constant = true;               ///< 1[X_i > t] = 1[X_{s_j} > t] for all i in B_j, all j
  double agreement = 1.0;             ///< mean over blocks of the agreeing fraction
  std::vector<double> per_block;      ///< agreeing fraction per block
  std::size_t conditioned_blocks = 0; ///< blocks with X_{s_j} > t
  double conditional_agreement = 0.0; ///< mean agreeing fraction over those blocks (0 if none)
};

BlockConstancy block_constancy(std::span<const double> data, double t, const BlockPartition& part);

/// t = sqrt(2 q log n), q > 0.
class LevelSpec {
 public:
  LevelSpec(double q, std::size_t n);
  double q() const noexcept { return q_; }
  double t() const noexcept { return t_; }

 private:
  double q_;
  double t_;
};

/// True iff some X_i > level.t().
bool level_exceedance(std::span<const double> data, const LevelSpec& level);

}  // namespace hcdep
