#pragma once

// Seeded Monte Carlo harness: error-rate experiments, null summaries and
// numerical checks of the dependence results (variance scaling, moment
// bounds, conditional exceedance, detector comparisons).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcdep/detectors.hpp"
#include "hcdep/gp_sim.hpp"
#include "hcdep/signal_model.hpp"

namespace hcdep {

enum class Detector { kHc, kMax, kNdd };

/// How the alternative is built.
enum class SignalScheme {
  kDefault,             ///< by detector: hc -> adjusted, max -> classical, ndd -> ndd
  kDependenceAdjusted,  ///< K = n^(1-beta'), nu = sqrt(2 r' log n)
  kClassical,           ///< K = n^(1-beta), nu = sqrt(2 r log n)
  kNdd,                 ///< 2 (r n^-alpha0 log n)^(1/2) at uniformly drawn sites
};

std::string to_string(Detector d);
std::string to_string(SignalScheme s);

struct NddSignal {
  double r_ndd = 4.0;
  std::size_t sites = 1;
  SignMode sign = SignMode::kPlus;
};

struct ExperimentConfig {
  AutocovSpec acov{1, 1.0, 0.0};
  std::optional<SignalSpec> sig;  ///< absent with no ndd signal: null only
  std::optional<NddSignal> ndd;
  Detector detector = Detector::kHc;
  double threshold = 2.2;  ///< on the normalized statistic (C for ndd)
  std::size_t reps = 100;
  std::uint64_t master_seed = 0;
  std::size_t refinement = kDefaultRefinement;
  HcMode mode = HcMode::kSigned;
  Placement placement = Placement::kUniform;
  SignalScheme scheme = SignalScheme::kDefault;
  unsigned threads = 0;              ///< 0 = hardware; never changes results
  double max_runtime_seconds = 0.0;  ///< 0 = unlimited
};

struct EmbeddingSummary {
  std::size_t m = 1;
  double min_eigenvalue = 1.0;
  double clipped_mass = 0.0;
  bool exact = true;
};

struct ExperimentReport {
  ExperimentConfig config;
  SignalScheme scheme = SignalScheme::kDefault;  ///< resolved
  bool has_alternative = false;
  double type1_rate = 0.0;
  std::optional<double> type2_rate;
  double null_mean = 0.0;
  double null_sd = 0.0;
  bool degenerate_sample = false;  ///< reps == 1, sd reported as 0
  std::optional<double> alt_mean;
  std::optional<double> alt_sd;
  std::vector<double> null_statistics;
  std::vector<double> alt_statistics;
  std::vector<std::size_t> realized_signal_counts;
  std::optional<std::size_t> nominal_signal_count;
  std::optional<double> signal_amplitude;
  EmbeddingSummary embedding;
  double runtime_seconds = 0.0;
};

inline constexpr int kReportSchemaVersion = 1;

/// Replicate j: null data = path 2j, alternative data = path 2j+1 plus the
/// signal drawn from stream (seed, j) of the signal domain.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Stable JSON form. Runtime is omitted unless include_timing is set, so
/// repeated runs serialize identically.
nlohmann::json to_json(const ExperimentReport& report, bool include_timing = false);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Header `n,kappa,alpha,alpha0,beta,r,detector,threshold,reps,type1,type2,null_mean,null_sd,seed`.
void write_batch_csv(std::ostream& out, std::span<const ExperimentReport> reports);

struct Table1Row {
  std::size_t n = 0;
  double kappa = 0.0;
  std::size_t reps = 0;
  double mean = 0.0;
  double sd = 0.0;
  bool degenerate_sample = false;
  EmbeddingSummary embedding;
};

/// Mean and SD of n^(-kappa/2) hc_n under the null for each n.
std::vector<Table1Row> table1_summary(std::span<const std::size_t> ns, std::size_t reps, std::uint64_t master_seed,
                                      double alpha = 0.5, double alpha0 = 0.1,
                                      std::size_t refinement = kDefaultRefinement, unsigned threads = 0);

/// table1 rows in batch-CSV layout (signal and error-rate columns empty).
void write_table1_csv(std::ostream& out, std::span<const Table1Row> rows, double alpha, double alpha0,
                      std::uint64_t master_seed);

/// Centered exceedance sum Δ(t) = sum_i {1[X_i > t] - Φ̄(t)} and the scale
/// δ(t) = {n^(kappa+1) Φ(t) Φ̄(t)}^(1/2).
struct CenteredExceedance {
  double t = 0.0;
  double delta = 0.0;
  double scale = 0.0;
};

CenteredExceedance centered_exceedance(std::span<const double> data, const AutocovSpec& spec, double t);

struct VarianceScalingRow {
  std::size_t n = 0;
  double kappa = 0.0;
  std::size_t reps = 0;
  std::vector<double> moments;       ///< E[Δ^(2ν)], ν = 1..nu_max
  std::vector<double> moment_ratio;  ///< moments[ν] / δ^(2ν)
  double variance_ratio = 0.0;       ///< E[Δ²] / (n^min(κ+1,2) e^(-t²/2))
  double block_ratio = 0.0;          ///< E[Δ²] / (n^min(κ+1,2) Φ(t) Φ̄(t))
};

/// Monte Carlo moments of Δ(t) for each spec; nu_max must be 1 or 2.
std::vector<VarianceScalingRow> variance_scaling_check(std::span<const AutocovSpec> specs, double t,
                                                       std::size_t reps, std::size_t nu_max,
                                                       std::uint64_t master_seed, unsigned threads = 0);

/// var sum_i 1[X_i > t] from the bivariate orthant probabilities.
double exact_exceedance_variance(const AutocovSpec& spec, double t);

/// Least-squares slope of log y on log x.
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

struct ConditionalEstimate {
  std::size_t m = 0;
  double probability = 0.0;
  double std_error = 0.0;
};

struct ConditionalExceedance {
  double t = 0.0;
  std::size_t hits = 0;
  std::size_t paths = 0;
  std::vector<ConditionalEstimate> estimates;
};

struct ConditionalOptions {
  std::size_t min_hits = 500;
  std::size_t max_paths = 20000;
  std::size_t batch_pairs = 32;
  unsigned threads = 0;
};

/// Estimates P(X_i > t for all i < m | X_0 > t) for each window length m,
/// using disjoint windows of length max(ms) along each path. Keeps adding
/// paths until `min_hits` conditioning events; throws DomainError with
/// advice to lower the level when the cap is reached first.
ConditionalExceedance conditional_exceedance_check(const AutocovSpec& spec, std::span<const std::size_t> ms,
                                                   double t, std::uint64_t master_seed,
                                                   const ConditionalOptions& options = {});

struct ConstancySummary {
  double t = 0.0;
  std::size_t block_len = 0;
  std::size_t paths = 0;
  double constant_fraction = 0.0;       ///< paths with every block constant
  double mean_agreement = 0.0;          ///< averaged over paths
  std::size_t conditioned_blocks = 0;   ///< pooled over paths
  double conditional_agreement = 0.0;   ///< pooled over conditioned blocks
};

/// block_constancy over `paths` null paths (path indices 0..paths-1).
ConstancySummary block_constancy_check(const AutocovSpec& spec, const BlockPartition& part, double t,
                                       std::size_t paths, std::uint64_t master_seed, unsigned threads = 0);

struct LevelExceedanceSummary {
  double q = 0.0;
  double t = 0.0;
  std::size_t paths = 0;
  std::size_t exceeded = 0;
  double rate = 0.0;
};

/// Fraction of null paths with max X_i > t.
LevelExceedanceSummary level_exceedance_check(const AutocovSpec& spec, const LevelSpec& level, std::size_t paths,
                                              std::uint64_t master_seed, unsigned threads = 0);

enum class Scenario { kHcVsNdd, kHcVsMax };

struct ComparisonPieces {
  std::optional<SignalSpec> sig;  ///< required for hc-vs-max
  NddSignal ndd;                  ///< used by hc-vs-ndd
  double hc_threshold = 2.2;
  double ndd_c = 2.0;
  double max_threshold = 0.0;
  std::size_t reps = 100;
  std::uint64_t master_seed = 0;
  std::size_t refinement = kDefaultRefinement;
  unsigned threads = 0;
};

struct ComparisonReport {
  Scenario scenario = Scenario::kHcVsMax;
  ExperimentReport hc;
  ExperimentReport other;  ///< ndd or max
};

/// Both detectors on the same null and alternative data.
ComparisonReport detector_comparison(const AutocovSpec& acov, Scenario scenario, const ComparisonPieces& pieces);

struct NullQuantile {
  double value = 0.0;
  double p = 0.0;
  std::size_t reps = 0;
  double half_width = 0.0;  ///< from the 95% order-statistic interval
};

/// Order-statistic p-quantile of n^(-kappa/2) hc_n under the null. Requires
/// reps (1 - p) >= 20.
NullQuantile null_quantile(const AutocovSpec& acov, std::size_t reps, double p, std::uint64_t master_seed,
                           std::size_t refinement = kDefaultRefinement, unsigned threads = 0);

/// Quantile of an already simulated sample, same rule as null_quantile.
NullQuantile sample_quantile(std::vector<double> sample, double p);

}  // namespace hcdep
