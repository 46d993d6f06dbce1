#pragma once

// Command-line front end. One flat key namespace shared by flags and the
// config file (`key = value` lines, same names as the long flags).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hcdep/errors.hpp"

namespace hcdep {

enum class Subcommand { kSimulate, kDetect, kMc, kTable1, kBoundary, kCheck };

std::string to_string(Subcommand s);

struct CliConfig {
  Subcommand subcommand = Subcommand::kMc;

  std::vector<std::size_t> n;  ///< one value, or a sweep for table1 and the variance check
  std::optional<double> alpha;
  std::optional<double> alpha0;
  std::optional<double> beta;
  std::optional<double> r;  ///< r_ndd (> 1) when detector = ndd
  std::optional<double> q;
  std::optional<double> C;
  std::optional<double> lambda;
  std::vector<double> kappa;  ///< boundary curves

  std::optional<std::string> detector;  ///< hc | max | ndd
  std::optional<double> threshold;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> refinement;
  std::optional<std::string> mode;       ///< signed | absolute
  std::optional<std::string> placement;  ///< uniform | blockwise
  std::optional<std::string> sign;       ///< plus | minus | random
  std::optional<std::size_t> sites;
  std::optional<std::string> method;  ///< simulate: circulant | cholesky
  std::optional<std::string> check;   ///< variance | conditional | constancy | level | quantile | compare
  std::optional<double> t;
  std::optional<double> p;
  std::optional<double> eps;
  std::optional<std::size_t> moments;
  std::optional<double> max_runtime;
  std::optional<std::string> input;

  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::optional<std::string> out;
  bool timing = false;

  bool operator==(const CliConfig&) const = default;
};

/// All violations found by validate(), reported at once.
class ValidationError : public DomainError {
 public:
  explicit ValidationError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Range and cross-field checks, defaults filled in. Idempotent.
CliConfig validate(const CliConfig& cfg);

/// Resolved config as written into every output.
std::string config_echo(const CliConfig& cfg);

/// Runs a validated config. Writes the result to cfg.out (temp file then
/// rename) or to `out` when no path is set. Returns 0, or 2 on resource
/// errors; other errors propagate.
int dispatch(const CliConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv, validates and dispatches. Exit codes: 0 success, 1 usage or
/// validation error (nothing written), 2 resource error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hcdep
