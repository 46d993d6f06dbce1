#include "hcdep/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "hcdep/errors.hpp"
#include "hcdep/format.hpp"
#include "hcdep/normal_kernel.hpp"
#include "hcdep/parallel.hpp"
#include "hcdep/rng.hpp"

namespace hcdep {

std::string to_string(Detector d) {
  switch (d) {
    case Detector::kHc: return "hc";
    case Detector::kMax: return "max";
    case Detector::kNdd: return "ndd";
  }
  return "?";
}

std::string to_string(SignalScheme s) {
  switch (s) {
    case SignalScheme::kDefault: return "default";
    case SignalScheme::kDependenceAdjusted: return "adjusted";
    case SignalScheme::kClassical: return "classical";
    case SignalScheme::kNdd: return "ndd";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

SignalScheme resolve_scheme(const ExperimentConfig& cfg) {
  if (cfg.scheme != SignalScheme::kDefault) return cfg.scheme;
  switch (cfg.detector) {
    case Detector::kHc: return SignalScheme::kDependenceAdjusted;
    case Detector::kMax: return SignalScheme::kClassical;
    case Detector::kNdd: return SignalScheme::kNdd;
  }
  return SignalScheme::kDependenceAdjusted;
}

bool scheme_has_alternative(const ExperimentConfig& cfg, SignalScheme scheme) {
  return scheme == SignalScheme::kNdd ? cfg.ndd.has_value() : cfg.sig.has_value();
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments mean_sd(std::span<const double> xs) {
  Moments m;
  if (xs.empty()) return m;
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return m;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return m;
}

EmbeddingSummary summarize(const EmbeddingReport& r) {
  return EmbeddingSummary{r.m, r.min_eigenvalue, r.clipped_mass, r.exact};
}

/// Evaluates one detector; returns the normalized statistic.
class Evaluator {
 public:
  explicit Evaluator(const ExperimentConfig& cfg) : cfg_(cfg) {
    if (cfg.detector == Detector::kHc) grid_ = default_grid(cfg.acov, cfg.refinement, cfg.mode);
    if (cfg.detector == Detector::kNdd) {
      if (!(cfg.threshold >= 1.0)) throw DomainError("ndd threshold C must be at least 1");
    }
  }
  double operator()(std::span<const double> data) const {
    switch (cfg_.detector) {
      case Detector::kHc: return hc_statistic(data, grid_).hc_normalized;
      case Detector::kMax: return max_classifier(data).normalized;
      case Detector::kNdd: return ndd_detect(data, cfg_.acov.alpha0(), cfg_.threshold).normalized;
    }
    return 0.0;
  }

 private:
  const ExperimentConfig& cfg_;
  HCGrid grid_;
};

/// Builds the contaminated alternative for replicate j.
class SignalMaker {
 public:
  SignalMaker(const ExperimentConfig& cfg, SignalScheme scheme) : cfg_(cfg), scheme_(scheme) {
    const double n = static_cast<double>(cfg.acov.n());
    switch (scheme) {
      case SignalScheme::kDependenceAdjusted:
        params_ = derive_params(cfg.acov, *cfg.sig);
        count_ = params_->count;
        amplitude_ = params_->nu;
        break;
      case SignalScheme::kClassical:
        count_ = static_cast<std::size_t>(std::llround(std::pow(n, 1.0 - cfg.sig->beta())));
        amplitude_ = std::sqrt(2.0 * cfg.sig->r() * std::log(n));
        break;
      case SignalScheme::kNdd: {
        ndd_cfg_.emplace(cfg.ndd->r_ndd, 1.0, cfg.ndd->sign);
        if (cfg.ndd->sites == 0 || cfg.ndd->sites + 1 > cfg.acov.n()) {
          throw DomainError("ndd signal must occupy between 1 and n - 1 sites");
        }
        count_ = cfg.ndd->sites;
        amplitude_ = ndd_amplitude(cfg.acov, cfg.ndd->r_ndd);
        break;
      }
      case SignalScheme::kDefault:
        throw InternalError("unresolved signal scheme");
    }
  }

  ContaminatedPath operator()(const GaussianPath& base, std::uint64_t replicate) const {
    const std::uint64_t seed = stream_key(cfg_.master_seed, replicate, StreamDomain::kSignals);
    switch (scheme_) {
      case SignalScheme::kDependenceAdjusted: return inject_signals(base, *params_, seed, cfg_.placement);
      case SignalScheme::kClassical: return inject_uniform(base, count_, amplitude_, seed);
      case SignalScheme::kNdd: {
        // Sites drawn without replacement from a stream separate from the
        // ones inject_* consume.
        CounterStream stream(stream_key(seed, 2, StreamDomain::kSignals));
        const std::size_t n = base.values.size();
        std::vector<std::size_t> sites;
        sites.reserve(count_);
        while (sites.size() < count_) {
          const auto s = static_cast<std::size_t>(stream.next_below(n));
          if (std::find(sites.begin(), sites.end(), s) == sites.end()) sites.push_back(s);
        }
        return inject_ndd_signal(base, *ndd_cfg_, sites, seed);
      }
      case SignalScheme::kDefault: break;
    }
    throw InternalError("unresolved signal scheme");
  }

  std::size_t count() const noexcept { return count_; }
  double amplitude() const noexcept { return amplitude_; }

 private:
  const ExperimentConfig& cfg_;
  SignalScheme scheme_;
  std::optional<DerivedSignalParams> params_;
  std::optional<NddConfig> ndd_cfg_;
  std::size_t count_ = 0;
  double amplitude_ = 0.0;
};

void check_runtime(Clock::time_point start, double cap, const std::atomic<std::size_t>& done, std::size_t total) {
  if (cap <= 0.0) return;
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  if (elapsed > cap) {
    throw ResourceError("runtime cap of " + format_double(cap) + " s exceeded after " + std::to_string(done.load()) +
                        " of " + std::to_string(total) + " replicates");
  }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.reps == 0) throw DomainError("reps must be at least 1");
  if (!std::isfinite(cfg.threshold)) throw DomainError("threshold must be finite");
  const auto start = Clock::now();

  ExperimentReport report;
  report.config = cfg;
  report.scheme = resolve_scheme(cfg);
  report.has_alternative = scheme_has_alternative(cfg, report.scheme);

  const Evaluator evaluate(cfg);
  std::optional<SignalMaker> signal;
  if (report.has_alternative) {
    signal.emplace(cfg, report.scheme);
    report.nominal_signal_count = signal->count();
    report.signal_amplitude = signal->amplitude();
  }
  const PathGenerator generator(cfg.acov);
  report.embedding = summarize(generator.report());

  report.null_statistics.resize(cfg.reps);
  if (report.has_alternative) {
    report.alt_statistics.resize(cfg.reps);
    report.realized_signal_counts.resize(cfg.reps);
  }
  std::atomic<std::size_t> done{0};
  parallel_for(cfg.reps, cfg.threads, [&](std::size_t j) {
    check_runtime(start, cfg.max_runtime_seconds, done, cfg.reps);
    auto [null_path, alt_path] = generator.pair(cfg.master_seed, j);
    report.null_statistics[j] = evaluate(null_path);
    if (signal) {
      const GaussianPath base{std::move(alt_path), cfg.acov, {cfg.master_seed, 2 * j + 1}};
      const ContaminatedPath y = (*signal)(base, j);
      report.alt_statistics[j] = evaluate(y.values);
      report.realized_signal_counts[j] = y.realized_count;
    }
    ++done;
  });

  // Fixed-order reduction.
  const double reps = static_cast<double>(cfg.reps);
  std::size_t rejected = 0;
  for (double s : report.null_statistics) rejected += s >= cfg.threshold;
  report.type1_rate = static_cast<double>(rejected) / reps;
  const Moments null_m = mean_sd(report.null_statistics);
  report.null_mean = null_m.mean;
  report.null_sd = null_m.sd;
  report.degenerate_sample = cfg.reps < 2;
  if (report.has_alternative) {
    std::size_t missed = 0;
    for (double s : report.alt_statistics) missed += s < cfg.threshold;
    report.type2_rate = static_cast<double>(missed) / reps;
    const Moments alt_m = mean_sd(report.alt_statistics);
    report.alt_mean = alt_m.mean;
    report.alt_sd = alt_m.sd;
  }
  report.runtime_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

namespace {

nlohmann::json optional_number(const std::optional<double>& x) {
  return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

std::string placement_name(Placement p) { return p == Placement::kUniform ? "uniform" : "blockwise"; }
std::string mode_name(HcMode m) { return m == HcMode::kSigned ? "signed" : "absolute"; }
std::string sign_name(SignMode s) {
  switch (s) {
    case SignMode::kPlus: return "plus";
    case SignMode::kMinus: return "minus";
    case SignMode::kRandom: return "random";
  }
  return "?";
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["n"] = cfg.acov.n();
  j["alpha"] = cfg.acov.alpha();
  j["alpha0"] = cfg.acov.alpha0();
  j["kappa"] = cfg.acov.kappa();
  j["beta"] = cfg.sig ? nlohmann::json(cfg.sig->beta()) : nlohmann::json(nullptr);
  j["r"] = cfg.sig ? nlohmann::json(cfg.sig->r()) : nlohmann::json(nullptr);
  if (cfg.ndd) {
    j["ndd"] = {{"r_ndd", cfg.ndd->r_ndd}, {"sites", cfg.ndd->sites}, {"sign", sign_name(cfg.ndd->sign)}};
  } else {
    j["ndd"] = nullptr;
  }
  j["detector"] = to_string(cfg.detector);
  j["threshold"] = cfg.threshold;
  j["reps"] = cfg.reps;
  j["seed"] = cfg.master_seed;
  j["refinement"] = cfg.refinement;
  j["mode"] = mode_name(cfg.mode);
  j["placement"] = placement_name(cfg.placement);
  j["scheme"] = to_string(cfg.scheme);
  return j;
}

nlohmann::json to_json(const ExperimentReport& r, bool include_timing) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["config"] = to_json(r.config);
  j["signal_scheme"] = to_string(r.scheme);
  j["type1_rate"] = r.type1_rate;
  j["type2_rate"] = optional_number(r.type2_rate);
  j["null_mean"] = r.null_mean;
  j["null_sd"] = r.null_sd;
  j["degenerate_sample"] = r.degenerate_sample;
  j["alt_mean"] = optional_number(r.alt_mean);
  j["alt_sd"] = optional_number(r.alt_sd);
  j["nominal_signal_count"] =
      r.nominal_signal_count ? nlohmann::json(*r.nominal_signal_count) : nlohmann::json(nullptr);
  j["signal_amplitude"] = optional_number(r.signal_amplitude);
  j["realized_signal_counts"] = r.realized_signal_counts;
  j["null_statistics"] = r.null_statistics;
  j["alt_statistics"] = r.alt_statistics;
  j["embedding"] = {{"m", r.embedding.m},
                    {"min_eigenvalue", r.embedding.min_eigenvalue},
                    {"clipped_mass", r.embedding.clipped_mass},
                    {"exact", r.embedding.exact}};
  if (include_timing) j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

namespace {
constexpr const char* kBatchHeader = "n,kappa,alpha,alpha0,beta,r,detector,threshold,reps,type1,type2,null_mean,null_sd,seed";
}

void write_batch_csv(std::ostream& out, std::span<const ExperimentReport> reports) {
  out << kBatchHeader << '\n';
  for (const auto& r : reports) {
    const auto& c = r.config;
    out << c.acov.n() << ',' << format_double(c.acov.kappa()) << ',' << format_double(c.acov.alpha()) << ','
        << format_double(c.acov.alpha0()) << ',' << (c.sig ? format_double(c.sig->beta()) : "") << ','
        << (c.sig ? format_double(c.sig->r()) : "") << ',' << to_string(c.detector) << ','
        << format_double(c.threshold) << ',' << c.reps << ',' << format_double(r.type1_rate) << ','
        << (r.type2_rate ? format_double(*r.type2_rate) : "") << ',' << format_double(r.null_mean) << ','
        << format_double(r.null_sd) << ',' << c.master_seed << '\n';
  }
}

std::vector<Table1Row> table1_summary(std::span<const std::size_t> ns, std::size_t reps, std::uint64_t master_seed,
                                      double alpha, double alpha0, std::size_t refinement, unsigned threads) {
  std::vector<Table1Row> rows;
  for (std::size_t n : ns) {
    ExperimentConfig cfg;
    cfg.acov = AutocovSpec(n, alpha, alpha0);
    cfg.detector = Detector::kHc;
    cfg.threshold = 0.0;
    cfg.reps = reps;
    cfg.master_seed = master_seed;
    cfg.refinement = refinement;
    cfg.threads = threads;
    const ExperimentReport r = run_experiment(cfg);
    rows.push_back(Table1Row{n, cfg.acov.kappa(), reps, r.null_mean, r.null_sd, r.degenerate_sample, r.embedding});
  }
  return rows;
}

void write_table1_csv(std::ostream& out, std::span<const Table1Row> rows, double alpha, double alpha0,
                      std::uint64_t master_seed) {
  out << kBatchHeader << '\n';
  for (const auto& r : rows) {
    out << r.n << ',' << format_double(r.kappa) << ',' << format_double(alpha) << ',' << format_double(alpha0)
        << ",,,hc,," << r.reps << ",,," << format_double(r.mean) << ',' << format_double(r.sd) << ','
        << master_seed << '\n';
  }
}

CenteredExceedance centered_exceedance(std::span<const double> data, const AutocovSpec& spec, double t) {
  const double n = static_cast<double>(data.size());
  const auto above = std::count_if(data.begin(), data.end(), [t](double x) { return x > t; });
  CenteredExceedance c;
  c.t = t;
  c.delta = static_cast<double>(above) - n * std_normal_sf(t);
  c.scale = std::sqrt(std::pow(n, spec.kappa() + 1.0) * std_normal_cdf(t) * std_normal_sf(t));
  return c;
}

namespace {

/// Null paths 0..count-1, evaluated pairwise; fn(index, path).
template <typename Fn>
void for_each_null_path(const PathGenerator& generator, std::size_t count, std::uint64_t seed, unsigned threads,
                        Fn&& fn) {
  parallel_for((count + 1) / 2, threads, [&](std::size_t p) {
    auto [a, b] = generator.pair(seed, p);
    fn(2 * p, a);
    if (2 * p + 1 < count) fn(2 * p + 1, b);
  });
}

}  // namespace

std::vector<VarianceScalingRow> variance_scaling_check(std::span<const AutocovSpec> specs, double t,
                                                       std::size_t reps, std::size_t nu_max,
                                                       std::uint64_t master_seed, unsigned threads) {
  if (nu_max < 1 || nu_max > 2) throw DomainError("variance_scaling_check: moment order must be 1 or 2");
  if (reps < 2) throw DomainError("variance_scaling_check: need at least 2 replicates");
  std::vector<VarianceScalingRow> rows;
  for (const auto& spec : specs) {
    const PathGenerator generator(spec);
    std::vector<double> deltas(reps);
    for_each_null_path(generator, reps, master_seed, threads, [&](std::size_t i, const std::vector<double>& x) {
      deltas[i] = centered_exceedance(x, spec, t).delta;
    });
    const double scale = centered_exceedance(std::vector<double>(spec.n(), 0.0), spec, t).scale;

    VarianceScalingRow row;
    row.n = spec.n();
    row.kappa = spec.kappa();
    row.reps = reps;
    for (std::size_t nu = 1; nu <= nu_max; ++nu) {
      double acc = 0.0;
      for (double d : deltas) acc += std::pow(d, 2.0 * static_cast<double>(nu));
      const double moment = acc / static_cast<double>(reps);
      row.moments.push_back(moment);
      row.moment_ratio.push_back(moment / std::pow(scale, 2.0 * static_cast<double>(nu)));
    }
    const double n = static_cast<double>(spec.n());
    const double growth = std::pow(n, std::min(spec.kappa() + 1.0, 2.0));
    row.variance_ratio = row.moments[0] / (growth * std::exp(-0.5 * t * t));
    row.block_ratio = row.moments[0] / (growth * std_normal_cdf(t) * std_normal_sf(t));
    rows.push_back(std::move(row));
  }
  return rows;
}

double exact_exceedance_variance(const AutocovSpec& spec, double t) {
  const double tail = std_normal_sf(t);
  const std::size_t n = spec.n();
  double var = static_cast<double>(n) * tail * (1.0 - tail);
  const std::size_t reach = static_cast<std::size_t>(std::min<std::uint64_t>(spec.support_len(), n));
  for (std::size_t k = 1; k < reach; ++k) {
    const double r = rho(spec, static_cast<std::int64_t>(k));
    const double cov = bivariate_exceedance({t, r}) - tail * tail;
    var += 2.0 * static_cast<double>(n - k) * cov;
  }
  return var;
}

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_loglog_slope: need two or more paired points");
  const std::size_t k = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("fit_loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ConditionalExceedance conditional_exceedance_check(const AutocovSpec& spec, std::span<const std::size_t> ms,
                                                   double t, std::uint64_t master_seed,
                                                   const ConditionalOptions& options) {
  if (ms.empty()) throw DomainError("conditional_exceedance_check: no window lengths");
  const std::size_t window = *std::max_element(ms.begin(), ms.end());
  if (*std::min_element(ms.begin(), ms.end()) == 0 || window > spec.n()) {
    throw DomainError("conditional_exceedance_check: window lengths must lie in [1, n]");
  }
  const PathGenerator generator(spec);
  const std::size_t starts_per_path = spec.n() / window;

  struct Tally {
    std::size_t hits = 0;
    std::vector<std::size_t> successes;
  };
  auto tally_path = [&](const std::vector<double>& x) {
    Tally tl;
    tl.successes.assign(ms.size(), 0);
    for (std::size_t w = 0; w < starts_per_path; ++w) {
      const std::size_t s = w * window;
      if (!(x[s] > t)) continue;
      ++tl.hits;
      // Length of the run of exceedances starting at s.
      std::size_t run = 1;
      while (run < window && x[s + run] > t) ++run;
      for (std::size_t i = 0; i < ms.size(); ++i) tl.successes[i] += run >= ms[i];
    }
    return tl;
  };

  ConditionalExceedance out;
  out.t = t;
  std::vector<std::size_t> successes(ms.size(), 0);
  std::size_t next_pair = 0;
  while (out.hits < options.min_hits) {
    if (out.paths >= options.max_paths) {
      throw DomainError("conditional_exceedance_check: only " + std::to_string(out.hits) +
                        " conditioning events at t = " + format_double(t) + " after " + std::to_string(out.paths) +
                        " paths; choose a smaller q (lower level)");
    }
    const std::size_t batch = options.batch_pairs;
    std::vector<Tally> tallies(2 * batch);
    parallel_for(batch, options.threads, [&](std::size_t b) {
      auto [a, c] = generator.pair(master_seed, next_pair + b);
      tallies[2 * b] = tally_path(a);
      tallies[2 * b + 1] = tally_path(c);
    });
    for (const auto& tl : tallies) {
      out.hits += tl.hits;
      for (std::size_t i = 0; i < ms.size(); ++i) successes[i] += tl.successes[i];
    }
    next_pair += batch;
    out.paths += 2 * batch;
  }
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const double p = static_cast<double>(successes[i]) / static_cast<double>(out.hits);
    out.estimates.push_back({ms[i], p, std::sqrt(p * (1.0 - p) / static_cast<double>(out.hits))});
  }
  return out;
}

ConstancySummary block_constancy_check(const AutocovSpec& spec, const BlockPartition& part, double t,
                                       std::size_t paths, std::uint64_t master_seed, unsigned threads) {
  if (paths == 0) throw DomainError("block_constancy_check: need at least one path");
  if (part.n() != spec.n()) throw DomainError("block_constancy_check: partition built for a different n");
  const PathGenerator generator(spec);
  std::vector<BlockConstancy> results(paths);
  for_each_null_path(generator, paths, master_seed, threads,
                     [&](std::size_t i, const std::vector<double>& x) { results[i] = block_constancy(x, t, part); });
  ConstancySummary out;
  out.t = t;
  out.block_len = part.block_len();
  out.paths = paths;
  std::size_t constant = 0;
  double agreement = 0.0, conditional = 0.0;
  for (const auto& r : results) {
    constant += r.constant;
    agreement += r.agreement;
    out.conditioned_blocks += r.conditioned_blocks;
    conditional += r.conditional_agreement * static_cast<double>(r.conditioned_blocks);
  }
  out.constant_fraction = static_cast<double>(constant) / static_cast<double>(paths);
  out.mean_agreement = agreement / static_cast<double>(paths);
  out.conditional_agreement = out.conditioned_blocks ? conditional / static_cast<double>(out.conditioned_blocks) : 0.0;
  return out;
}

LevelExceedanceSummary level_exceedance_check(const AutocovSpec& spec, const LevelSpec& level, std::size_t paths,
                                              std::uint64_t master_seed, unsigned threads) {
  if (paths == 0) throw DomainError("level_exceedance_check: need at least one path");
  const PathGenerator generator(spec);
  std::vector<std::uint8_t> hit(paths, 0);
  for_each_null_path(generator, paths, master_seed, threads,
                     [&](std::size_t i, const std::vector<double>& x) { hit[i] = level_exceedance(x, level); });
  LevelExceedanceSummary out{level.q(), level.t(), paths, 0, 0.0};
  for (auto h : hit) out.exceeded += h;
  out.rate = static_cast<double>(out.exceeded) / static_cast<double>(paths);
  return out;
}

ComparisonReport detector_comparison(const AutocovSpec& acov, Scenario scenario, const ComparisonPieces& pieces) {
  ExperimentConfig base;
  base.acov = acov;
  base.reps = pieces.reps;
  base.master_seed = pieces.master_seed;
  base.refinement = pieces.refinement;
  base.threads = pieces.threads;

  ComparisonReport out;
  out.scenario = scenario;
  ExperimentConfig hc = base;
  ExperimentConfig other = base;
  hc.detector = Detector::kHc;
  hc.threshold = pieces.hc_threshold;
  if (scenario == Scenario::kHcVsNdd) {
    hc.scheme = other.scheme = SignalScheme::kNdd;
    hc.ndd = other.ndd = pieces.ndd;
    other.detector = Detector::kNdd;
    other.threshold = pieces.ndd_c;
  } else {
    if (!pieces.sig) throw DomainError("hc-vs-max comparison needs (beta, r)");
    hc.scheme = other.scheme = SignalScheme::kClassical;
    hc.sig = other.sig = pieces.sig;
    other.detector = Detector::kMax;
    other.threshold = pieces.max_threshold;
  }
  out.hc = run_experiment(hc);
  out.other = run_experiment(other);
  return out;
}

NullQuantile sample_quantile(std::vector<double> sample, double p) {
  const std::size_t reps = sample.size();
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("quantile level p must lie in [0, 1)");
  if (static_cast<double>(reps) * (1.0 - p) < 20.0 - 1e-9) {
    throw DomainError("null_quantile: reps * (1 - p) must be at least 20 (reps = " + std::to_string(reps) +
                      ", p = " + format_double(p) + ")");
  }
  std::sort(sample.begin(), sample.end());
  const double r = static_cast<double>(reps);
  auto clamp_index = [&](double idx) {
    return static_cast<std::size_t>(std::clamp(idx, 0.0, r - 1.0));
  };
  const std::size_t k = p == 0.0 ? 0 : clamp_index(std::ceil(p * r) - 1.0);
  const double spread = 1.96 * std::sqrt(r * p * (1.0 - p));
  const std::size_t lo = clamp_index(std::floor(p * r - spread) - 1.0);
  const std::size_t hi = clamp_index(std::ceil(p * r + spread) - 1.0);
  return NullQuantile{sample[k], p, reps, 0.5 * (sample[hi] - sample[lo])};
}

NullQuantile null_quantile(const AutocovSpec& acov, std::size_t reps, double p, std::uint64_t master_seed,
                           std::size_t refinement, unsigned threads) {
  if (!(p >= 0.0 && p < 1.0) || static_cast<double>(reps) * (1.0 - p) < 20.0 - 1e-9) {
    return sample_quantile(std::vector<double>(reps), p);  // throws the precondition error
  }
  ExperimentConfig cfg;
  cfg.acov = acov;
  cfg.detector = Detector::kHc;
  cfg.threshold = 0.0;
  cfg.reps = reps;
  cfg.master_seed = master_seed;
  cfg.refinement = refinement;
  cfg.threads = threads;
  return sample_quantile(run_experiment(cfg).null_statistics, p);
}

}  // namespace hcdep
