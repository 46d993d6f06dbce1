#include "hcdep/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "hcdep/detectors.hpp"
#include "hcdep/experiments.hpp"
#include "hcdep/format.hpp"
#include "hcdep/gp_sim.hpp"
#include "hcdep/signal_model.hpp"

namespace hcdep {

namespace {

using nlohmann::json;

constexpr std::pair<Subcommand, const char*> kSubcommands[] = {
    {Subcommand::kSimulate, "simulate"}, {Subcommand::kDetect, "detect"},     {Subcommand::kMc, "mc"},
    {Subcommand::kTable1, "table1"},     {Subcommand::kBoundary, "boundary"}, {Subcommand::kCheck, "check"},
};

const std::vector<std::string> kChecks = {"variance", "conditional", "constancy", "level", "quantile", "compare"};

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? sep : "") + items[i];
  return s;
}

bool one_of(const std::optional<std::string>& v, std::initializer_list<const char*> allowed) {
  return v && std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return *v == a; });
}

}  // namespace

std::string to_string(Subcommand s) {
  for (const auto& [k, name] : kSubcommands) {
    if (k == s) return name;
  }
  return "?";
}

ValidationError::ValidationError(std::vector<std::string> errors)
    : DomainError(join(errors, "; ")), errors_(std::move(errors)) {}

CliConfig validate(const CliConfig& in) {
  CliConfig c = in;
  std::vector<std::string> errs;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  const Subcommand sc = c.subcommand;
  const bool is_check = sc == Subcommand::kCheck;

  if (!c.detector) c.detector = "hc";
  if (!c.reps) c.reps = 100;
  if (!c.refinement) c.refinement = kDefaultRefinement;
  need(one_of(c.detector, {"hc", "max", "ndd"}), "detector must be one of hc, max, ndd");
  const bool ndd = c.detector == "ndd";

  if (is_check) {
    if (!c.check) {
      errs.push_back("check: missing; choose one of " + join(kChecks, ", "));
    } else {
      need(std::find(kChecks.begin(), kChecks.end(), *c.check) != kChecks.end(),
           "check must be one of " + join(kChecks, ", "));
    }
  } else {
    need(!c.check, "check is only used by the check subcommand");
  }
  const std::string check = c.check.value_or("");

  // Subcommand defaults.
  if (sc == Subcommand::kTable1) {
    if (!c.alpha) c.alpha = 0.5;
    if (!c.alpha0) c.alpha0 = 0.1;
    if (c.n.empty()) c.n = {1024, 4096, 16384, 65536};
  }
  if (sc == Subcommand::kBoundary && c.kappa.empty()) c.kappa = {0.0, 0.2, 0.4, 0.6};
  if (sc == Subcommand::kSimulate && !c.method) c.method = "circulant";
  if (is_check && check == "variance") {
    if (c.n.empty()) c.n = {256, 1024, 4096, 16384};
    if (!c.t) c.t = 1.0;
    if (!c.moments) c.moments = 1;
  }

  // Field ranges.
  for (std::size_t n : c.n) need(n >= 1, "n must be at least 1");
  if (c.alpha) need(std::isfinite(*c.alpha) && *c.alpha > 0.0, "alpha must be positive");
  if (c.alpha0) need(std::isfinite(*c.alpha0) && *c.alpha0 >= 0.0, "alpha0 must be non-negative");
  if (c.beta) need(*c.beta > 0.5 && *c.beta < 1.0, "beta must lie in (1/2, 1)");
  if (c.r) {
    if (ndd) {
      need(std::isfinite(*c.r) && *c.r > 1.0, "r must exceed 1 for the ndd detector");
    } else {
      need(*c.r > 0.0 && *c.r < 1.0, "r must lie in (0, 1)");
    }
  }
  if (c.q) need(std::isfinite(*c.q) && *c.q > 0.0, "q must be positive");
  if (c.C) need(std::isfinite(*c.C) && *c.C >= 1.0, "C must be at least 1");
  if (c.threshold) need(std::isfinite(*c.threshold), "threshold must be finite");
  need(*c.reps >= 1, "reps must be at least 1");
  need(*c.refinement >= 1, "refinement must be at least 1");
  if (c.mode) need(one_of(c.mode, {"signed", "absolute"}), "mode must be signed or absolute");
  if (c.placement) need(one_of(c.placement, {"uniform", "blockwise"}), "placement must be uniform or blockwise");
  if (c.sign) need(one_of(c.sign, {"plus", "minus", "random"}), "sign must be plus, minus or random");
  if (c.sites) need(*c.sites >= 1, "sites must be at least 1");
  if (c.method) need(one_of(c.method, {"circulant", "cholesky"}), "method must be circulant or cholesky");
  if (c.t) need(std::isfinite(*c.t), "t must be finite");
  if (c.p) need(*c.p >= 0.0 && *c.p < 1.0, "p must lie in [0, 1)");
  if (c.eps) need(std::isfinite(*c.eps) && *c.eps >= 0.0, "eps must be non-negative");
  if (c.moments) need(*c.moments == 1 || *c.moments == 2, "moments must be 1 or 2");
  if (c.max_runtime) need(std::isfinite(*c.max_runtime) && *c.max_runtime >= 0.0, "max-runtime must be non-negative");
  for (double k : c.kappa) need(k >= 0.0 && k < 1.0, "kappa must lie in [0, 1)");

  // Requirements per subcommand.
  const bool stochastic = sc != Subcommand::kBoundary && sc != Subcommand::kDetect;
  if (stochastic) need(c.seed.has_value(), "seed is required (seeds are never taken from the environment)");
  const bool needs_process = sc == Subcommand::kSimulate || sc == Subcommand::kMc || is_check;
  if (needs_process) {
    need(c.alpha.has_value(), "alpha is required");
    need(c.alpha0.has_value(), "alpha0 is required");
  }
  const bool sweep = sc == Subcommand::kTable1 || (is_check && check == "variance");
  if (needs_process && !sweep) need(c.n.size() == 1, "n: exactly one value is required");
  if (sc == Subcommand::kBoundary || sc == Subcommand::kDetect) need(c.n.empty(), "n is not used by " + to_string(sc));
  if (sc != Subcommand::kBoundary) need(c.kappa.empty(), "kappa is only used by the boundary subcommand");
  if (sc == Subcommand::kDetect) need(c.input.has_value(), "input is required");
  if (sc == Subcommand::kTable1) need(c.detector == "hc", "table1 uses the hc detector");

  const bool have_kappa = c.alpha && c.alpha0 && *c.alpha > 0.0 && *c.alpha0 >= 0.0;
  const double kappa = have_kappa ? *c.alpha0 / *c.alpha : 0.0;
  const bool uses_hc = (c.detector == "hc" && (sc == Subcommand::kMc || sc == Subcommand::kDetect)) ||
                       sc == Subcommand::kTable1 || (is_check && (check == "quantile" || check == "compare"));
  if (uses_hc) {
    if (sc == Subcommand::kDetect) {
      need(c.alpha && c.alpha0, "alpha and alpha0 are required by the hc detector");
    }
    if (have_kappa) {
      need(kappa < 1.0, "kappa = alpha0/alpha = " + format_double(kappa) +
                            ": degenerate regime, the hc statistic needs kappa < 1");
    }
    for (std::size_t n : c.n) need(n >= 2, "n must be at least 2 for the hc statistic");
    if (!c.mode) c.mode = "signed";
  }
  if (ndd && (sc == Subcommand::kMc || sc == Subcommand::kDetect)) {
    need(c.alpha0.has_value(), "alpha0 is required by the ndd detector");
    for (std::size_t n : c.n) need(n >= 2, "n must be at least 2 for the ndd detector");
  }

  // Detector threshold and signal.
  const bool detector_run = sc == Subcommand::kMc || sc == Subcommand::kDetect;
  if (detector_run) {
    if (ndd) {
      if (!c.C) c.C = c.threshold.value_or(2.0);
      if (c.threshold) need(*c.threshold == *c.C, "threshold: the ndd detector is tuned by C; give C only");
      c.threshold = c.C;
    } else {
      need(!c.C, "C is only used by the ndd detector");
      if (!c.threshold) c.threshold = c.detector == "max" ? 0.0 : 2.2;
    }
  }
  if (sc == Subcommand::kMc) {
    if (ndd) {
      need(!c.beta, "beta is not used by the ndd detector");
      if (c.r) {
        if (!c.sites) c.sites = 1;
        if (!c.sign) c.sign = "plus";
        if (c.C) need(*c.C < *c.r, "C must be below r for the ndd detector");
        if (!c.n.empty() && c.sites) need(*c.sites + 1 <= c.n.front(), "sites must be at most n - 1");
      }
    } else {
      need(c.beta.has_value() == c.r.has_value(), "beta and r must be given together");
      if (c.detector == "hc" && c.beta && !c.placement) c.placement = "uniform";
    }
  }
  if (is_check) {
    if (check == "conditional" || check == "constancy" || check == "level") need(c.q.has_value(), "q is required");
    if (check == "conditional" || check == "constancy") need(have_kappa && kappa > 0.0, "kappa must be positive");
    if (c.q && have_kappa) {
      need(std::abs(*c.q - (1.0 - kappa)) > 1e-12, "q = 1 - kappa is the unresolved boundary case; move q off it");
    }
    if (check == "conditional" && have_kappa && !c.eps) c.eps = 0.1 * kappa;
    if (check == "constancy" && have_kappa) {
      if (!c.lambda) c.lambda = 0.8 * kappa;
      need(*c.lambda > 0.0 && *c.lambda < kappa, "lambda must lie in (0, kappa)");
    }
    if (check == "variance") need(*c.reps >= 2, "reps must be at least 2 for the variance check");
    if (check == "quantile") {
      need(c.p.has_value(), "p is required");
      if (c.p) {
        need(static_cast<double>(*c.reps) * (1.0 - *c.p) >= 20.0 - 1e-9,
             "reps: reps * (1 - p) must be at least 20");
      }
    }
    if (check == "compare") {
      need(c.detector == "ndd" || c.detector == "max", "detector must be ndd or max for the comparison");
      if (!c.threshold) c.threshold = 2.2;
      if (ndd) {
        need(c.r.has_value(), "r is required for the ndd comparison");
        if (!c.C) c.C = 2.0;
        if (c.r) need(*c.C < *c.r, "C must be below r for the ndd detector");
        if (!c.sites) c.sites = 1;
        if (!c.sign) c.sign = "plus";
      } else {
        need(c.beta && c.r, "beta and r are required for the max comparison");
      }
    }
  }
  if (c.lambda) need(is_check && check == "constancy", "lambda is only used by the constancy check");

  if (!errs.empty()) throw ValidationError(std::move(errs));
  return c;
}

namespace {

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string config_echo(const CliConfig& c) {
  // Thread count and output path are deliberately absent: neither can
  // change the result, and echoing them would make outputs differ.
  json j;
  j["subcommand"] = to_string(c.subcommand);
  j["n"] = c.n;
  j["alpha"] = opt_json(c.alpha);
  j["alpha0"] = opt_json(c.alpha0);
  j["beta"] = opt_json(c.beta);
  j["r"] = opt_json(c.r);
  j["q"] = opt_json(c.q);
  j["C"] = opt_json(c.C);
  j["lambda"] = opt_json(c.lambda);
  j["kappa"] = c.kappa;
  j["detector"] = opt_json(c.detector);
  j["threshold"] = opt_json(c.threshold);
  j["reps"] = opt_json(c.reps);
  j["refinement"] = opt_json(c.refinement);
  j["mode"] = opt_json(c.mode);
  j["placement"] = opt_json(c.placement);
  j["sign"] = opt_json(c.sign);
  j["sites"] = opt_json(c.sites);
  j["method"] = opt_json(c.method);
  j["check"] = opt_json(c.check);
  j["t"] = opt_json(c.t);
  j["p"] = opt_json(c.p);
  j["eps"] = opt_json(c.eps);
  j["moments"] = opt_json(c.moments);
  j["max_runtime"] = opt_json(c.max_runtime);
  j["input"] = opt_json(c.input);
  j["seed"] = opt_json(c.seed);
  return j.dump();
}

namespace {

HcMode parse_mode(const CliConfig& c) { return c.mode == "absolute" ? HcMode::kAbsolute : HcMode::kSigned; }

SignMode parse_sign(const CliConfig& c) {
  if (c.sign == "minus") return SignMode::kMinus;
  if (c.sign == "random") return SignMode::kRandom;
  return SignMode::kPlus;
}

Detector parse_detector(const CliConfig& c) {
  if (c.detector == "max") return Detector::kMax;
  if (c.detector == "ndd") return Detector::kNdd;
  return Detector::kHc;
}

AutocovSpec acov_of(const CliConfig& c, std::size_t n) { return AutocovSpec(n, *c.alpha, *c.alpha0); }

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ResourceError("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw ResourceError("write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ResourceError("cannot move output into place at " + path + ": " + ec.message());
  }
}

std::string csv_echo(const CliConfig& c) { return "# config " + config_echo(c) + "\n"; }

json json_with_config(const CliConfig& c, json body) {
  body["cli_config"] = json::parse(config_echo(c));
  return body;
}

std::string run_simulate(const CliConfig& c) {
  const AutocovSpec spec = acov_of(c, c.n.front());
  const auto paths = c.method == "cholesky" ? simulate_cholesky(spec, *c.reps, *c.seed)
                                            : simulate_paths(spec, *c.reps, *c.seed, c.threads);
  std::ostringstream os;
  os << csv_echo(c);
  write_paths_csv(os, paths);
  return os.str();
}

std::vector<std::vector<double>> read_input(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ResourceError("cannot open input " + path);
  auto rows = read_paths_csv(f);
  // A single column is one series, not many series of length one.
  const bool column = rows.size() > 1 &&
                      std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.size() == 1; });
  if (column) {
    std::vector<double> series;
    for (const auto& r : rows) series.push_back(r.front());
    rows = {std::move(series)};
  }
  if (rows.empty()) throw DomainError("input: no data rows in " + path);
  return rows;
}

std::string run_detect(const CliConfig& c) {
  const auto rows = read_input(*c.input);
  json records = json::array();
  for (const auto& x : rows) {
    DetectorRecord rec;
    if (c.detector == "hc") {
      const AutocovSpec spec = acov_of(c, x.size());
      rec = hc_detect(x, default_grid(spec, *c.refinement, parse_mode(c)), *c.threshold);
    } else if (c.detector == "max") {
      rec = max_classifier(x);
      rec.threshold = *c.threshold;
      rec.decision = rec.normalized > *c.threshold;
    } else {
      rec = ndd_detect(x, *c.alpha0, *c.C);
    }
    json r = to_json(rec);
    r["n"] = x.size();
    records.push_back(std::move(r));
  }
  return json_with_config(c, json{{"schema_version", kReportSchemaVersion}, {"records", records}}).dump(2) + "\n";
}

ExperimentConfig experiment_of(const CliConfig& c) {
  ExperimentConfig e;
  e.acov = acov_of(c, c.n.front());
  if (c.beta && c.r && c.detector != "ndd") e.sig = SignalSpec(*c.beta, *c.r);
  if (c.detector == "ndd" && c.r) e.ndd = NddSignal{*c.r, c.sites.value_or(1), parse_sign(c)};
  e.detector = parse_detector(c);
  e.threshold = c.threshold.value_or(0.0);
  e.reps = *c.reps;
  e.master_seed = *c.seed;
  e.refinement = *c.refinement;
  e.mode = parse_mode(c);
  e.placement = c.placement == "blockwise" ? Placement::kBlockwise : Placement::kUniform;
  e.threads = c.threads;
  e.max_runtime_seconds = c.max_runtime.value_or(0.0);
  return e;
}

std::string run_mc(const CliConfig& c) {
  const ExperimentReport report = run_experiment(experiment_of(c));
  if (c.out && ends_with(*c.out, ".csv")) {
    std::ostringstream os;
    os << csv_echo(c);
    write_batch_csv(os, std::span<const ExperimentReport>(&report, 1));
    return os.str();
  }
  return json_with_config(c, to_json(report, c.timing)).dump(2) + "\n";
}

std::string run_table1(const CliConfig& c) {
  const auto rows = table1_summary(c.n, *c.reps, *c.seed, *c.alpha, *c.alpha0, *c.refinement, c.threads);
  std::ostringstream os;
  os << csv_echo(c);
  write_table1_csv(os, rows, *c.alpha, *c.alpha0, *c.seed);
  return os.str();
}

std::string run_boundary(const CliConfig& c) {
  const auto grid = default_beta_grid();
  std::vector<BoundaryCurve> curves;
  for (double k : c.kappa) curves.push_back(boundary_curve(k, grid));
  std::ostringstream os;
  os << csv_echo(c);
  write_boundary_csv(os, curves);
  return os.str();
}

json embedding_json(const EmbeddingSummary& e) {
  return {{"m", e.m}, {"min_eigenvalue", e.min_eigenvalue}, {"clipped_mass", e.clipped_mass}, {"exact", e.exact}};
}

json check_variance(const CliConfig& c) {
  std::vector<AutocovSpec> specs;
  for (std::size_t n : c.n) specs.push_back(acov_of(c, n));
  const auto rows = variance_scaling_check(specs, *c.t, *c.reps, *c.moments, *c.seed, c.threads);
  json out = json::array();
  std::vector<double> ns, mc, exact;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double ev = exact_exceedance_variance(specs[i], *c.t);
    out.push_back({{"n", r.n},
                   {"kappa", r.kappa},
                   {"reps", r.reps},
                   {"moments", r.moments},
                   {"moment_ratio", r.moment_ratio},
                   {"variance_ratio", r.variance_ratio},
                   {"block_ratio", r.block_ratio},
                   {"exact_variance", ev}});
    ns.push_back(static_cast<double>(r.n));
    mc.push_back(r.moments[0]);
    exact.push_back(ev);
  }
  json j{{"rows", out}, {"t", *c.t}};
  if (rows.size() >= 2) {
    j["slope"] = fit_loglog_slope(ns, mc);
    j["exact_slope"] = fit_loglog_slope(ns, exact);
  }
  return j;
}

json check_conditional(const CliConfig& c) {
  const AutocovSpec spec = acov_of(c, c.n.front());
  const double n = static_cast<double>(spec.n());
  const double t = LevelSpec(*c.q, spec.n()).t();
  std::vector<std::size_t> ms = {
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::pow(n, spec.kappa() - *c.eps) + 1e-9))),
      static_cast<std::size_t>(std::min<std::uint64_t>(spec.support_len(), spec.n()))};
  ConditionalOptions opts;
  opts.threads = c.threads;
  const auto res = conditional_exceedance_check(spec, ms, t, *c.seed, opts);
  json est = json::array();
  for (const auto& e : res.estimates) est.push_back({{"m", e.m}, {"probability", e.probability}, {"std_error", e.std_error}});
  return {{"t", res.t}, {"hits", res.hits}, {"paths", res.paths}, {"estimates", est}};
}

json check_constancy(const CliConfig& c) {
  const AutocovSpec spec = acov_of(c, c.n.front());
  const double t = LevelSpec(*c.q, spec.n()).t();
  auto summary = [&](const BlockPartition& part) {
    const auto s = block_constancy_check(spec, part, t, *c.reps, *c.seed, c.threads);
    return json{{"block_len", s.block_len},
                {"constant_fraction", s.constant_fraction},
                {"mean_agreement", s.mean_agreement},
                {"conditioned_blocks", s.conditioned_blocks},
                {"conditional_agreement", s.conditional_agreement}};
  };
  const auto full = static_cast<std::size_t>(std::min<std::uint64_t>(spec.support_len(), spec.n()));
  return {{"t", t},
          {"paths", *c.reps},
          {"lambda_blocks", summary(BlockPartition::from_exponent(spec, *c.lambda))},
          {"kappa_blocks", summary(BlockPartition::from_length(spec.n(), full))}};
}

json check_level(const CliConfig& c) {
  const AutocovSpec spec = acov_of(c, c.n.front());
  const auto s = level_exceedance_check(spec, LevelSpec(*c.q, spec.n()), *c.reps, *c.seed, c.threads);
  return {{"q", s.q}, {"t", s.t}, {"paths", s.paths}, {"exceeded", s.exceeded}, {"rate", s.rate}};
}

json check_quantile(const CliConfig& c) {
  const auto nq = null_quantile(acov_of(c, c.n.front()), *c.reps, *c.p, *c.seed, *c.refinement, c.threads);
  return {{"value", nq.value}, {"p", nq.p}, {"reps", nq.reps}, {"half_width", nq.half_width}};
}

json rates_json(const ExperimentReport& r) {
  return {{"detector", to_string(r.config.detector)},
          {"threshold", r.config.threshold},
          {"type1_rate", r.type1_rate},
          {"type2_rate", opt_json(r.type2_rate)},
          {"null_mean", r.null_mean},
          {"null_sd", r.null_sd},
          {"embedding", embedding_json(r.embedding)}};
}

json check_compare(const CliConfig& c) {
  ComparisonPieces pieces;
  const bool ndd = c.detector == "ndd";
  if (!ndd) pieces.sig = SignalSpec(*c.beta, *c.r);
  if (ndd) {
    pieces.ndd = NddSignal{*c.r, *c.sites, parse_sign(c)};
    pieces.ndd_c = *c.C;
  }
  pieces.hc_threshold = *c.threshold;
  pieces.reps = *c.reps;
  pieces.master_seed = *c.seed;
  pieces.refinement = *c.refinement;
  pieces.threads = c.threads;
  const auto rep = detector_comparison(acov_of(c, c.n.front()), ndd ? Scenario::kHcVsNdd : Scenario::kHcVsMax, pieces);
  return {{"scenario", ndd ? "hc-vs-ndd" : "hc-vs-max"}, {"hc", rates_json(rep.hc)}, {"other", rates_json(rep.other)}};
}

std::string run_check(const CliConfig& c) {
  json body;
  const std::string& which = *c.check;
  if (which == "variance") body = check_variance(c);
  else if (which == "conditional") body = check_conditional(c);
  else if (which == "constancy") body = check_constancy(c);
  else if (which == "level") body = check_level(c);
  else if (which == "quantile") body = check_quantile(c);
  else body = check_compare(c);
  body["check"] = which;
  body["schema_version"] = kReportSchemaVersion;
  return json_with_config(c, std::move(body)).dump(2) + "\n";
}

}  // namespace

int dispatch(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    std::string content;
    switch (cfg.subcommand) {
      case Subcommand::kSimulate: content = run_simulate(cfg); break;
      case Subcommand::kDetect: content = run_detect(cfg); break;
      case Subcommand::kMc: content = run_mc(cfg); break;
      case Subcommand::kTable1: content = run_table1(cfg); break;
      case Subcommand::kBoundary: content = run_boundary(cfg); break;
      case Subcommand::kCheck: content = run_check(cfg); break;
    }
    if (cfg.out) {
      write_atomically(*cfg.out, content);
    } else {
      out << content;
    }
    return 0;
  } catch (const ResourceError& e) {
    err << "hcdep: resource error: " << e.what() << '\n';
    return 2;
  }
}

namespace {

template <typename T>
void add_optional(CLI::App& app, const std::string& flag, std::optional<T>& dst, const std::string& help) {
  app.add_option_function<T>(flag, [&dst](const T& v) { dst = v; }, help);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  std::string sub;
  CLI::App app{"Higher criticism under strongly dependent Gaussian noise"};
  app.set_config("--config", "", "File of `key = value` lines using the flag names");
  app.allow_config_extras(CLI::config_extras_mode::error);
  std::vector<std::string> names;
  for (const auto& [k, name] : kSubcommands) names.emplace_back(name);
  app.add_option("subcommand", sub, join(names, " | "))->required()->check(CLI::IsMember(names));

  app.add_option("--n", cfg.n, "Series length; comma list for table1 and the variance check")->delimiter(',');
  add_optional(app, "--alpha", cfg.alpha, "Autocovariance exponent alpha");
  add_optional(app, "--alpha0", cfg.alpha0, "Range exponent alpha0 (kappa = alpha0/alpha)");
  add_optional(app, "--beta", cfg.beta, "Sparsity beta in (1/2, 1)");
  add_optional(app, "--r", cfg.r, "Strength r in (0, 1); r > 1 for ndd");
  add_optional(app, "--q", cfg.q, "Level exponent, t = sqrt(2 q log n)");
  add_optional(app, "--C", cfg.C, "ndd constant, C >= 1");
  add_optional(app, "--lambda", cfg.lambda, "Block exponent for the constancy check");
  app.add_option("--kappa", cfg.kappa, "Boundary curves, comma list")->delimiter(',');
  add_optional(app, "--detector", cfg.detector, "hc | max | ndd");
  add_optional(app, "--threshold", cfg.threshold, "Threshold on the normalized statistic");
  add_optional(app, "--reps", cfg.reps, "Replicates (paths for simulate and the path checks)");
  add_optional(app, "--refinement", cfg.refinement, "Uniform refinement points for hc");
  add_optional(app, "--mode", cfg.mode, "signed | absolute");
  add_optional(app, "--placement", cfg.placement, "uniform | blockwise");
  add_optional(app, "--sign", cfg.sign, "ndd signal sign: plus | minus | random");
  add_optional(app, "--sites", cfg.sites, "ndd signal sites");
  add_optional(app, "--method", cfg.method, "simulate: circulant | cholesky");
  add_optional(app, "--check", cfg.check, join(kChecks, " | "));
  add_optional(app, "--t", cfg.t, "Level for the variance check");
  add_optional(app, "--p", cfg.p, "Quantile level");
  add_optional(app, "--eps", cfg.eps, "Conditional check: short window n^(kappa - eps)");
  add_optional(app, "--moments", cfg.moments, "Variance check moment order, 1 or 2");
  add_optional(app, "--max-runtime", cfg.max_runtime, "Seconds before mc gives up (0 = no cap)");
  add_optional(app, "--input", cfg.input, "detect: CSV of series, one per row (or one column)");
  add_optional(app, "--seed", cfg.seed, "Master seed (required for stochastic subcommands)");
  app.add_option("--threads", cfg.threads, "Worker threads, 0 = hardware; never changes results");
  add_optional(app, "--out", cfg.out, "Output path (default stdout)");
  app.add_flag("--timing", cfg.timing, "Include runtime in JSON reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "hcdep: " << e.what() << '\n';
    return 1;
  }
  for (const auto& [k, name] : kSubcommands) {
    if (sub == name) cfg.subcommand = k;
  }

  try {
    const CliConfig resolved = validate(cfg);
    return dispatch(resolved, out, err);
  } catch (const ValidationError& e) {
    for (const auto& msg : e.errors()) err << "hcdep: " << msg << '\n';
    return 1;
  } catch (const DomainError& e) {
    err << "hcdep: " << e.what() << '\n';
    return 1;
  } catch (const ResourceError& e) {
    err << "hcdep: resource error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace hcdep
