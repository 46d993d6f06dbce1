#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hcdep/detectors.hpp"
#include "hcdep/errors.hpp"
#include "hcdep/normal_kernel.hpp"
#include "hcdep/rng.hpp"
#include "oracles.hpp"

using namespace hcdep;

namespace {

std::vector<double> iid_normals(std::size_t n, std::uint64_t seed) {
  CounterStream s(stream_key(seed, 0));
  std::vector<double> x(n);
  for (double& v : x) v = s.next_normal();
  return x;
}

}  // namespace

TEST_CASE("default grid bound") {
  const auto g = default_grid(AutocovSpec(1024, 0.5, 0.1));
  const double ref = oracle::bisect([](double t) { return oracle::sf(t) - std::ldexp(1.0, -8); }, 0.0, 8.0, 80);
  CHECK(std::abs(g.t_n - ref) < 1e-9);
  CHECK(std::abs(g.t_n - 2.6601) < 1e-3);
  CHECK(g.refinement.size() == kDefaultRefinement);
  CHECK(g.refinement.front() == doctest::Approx(-g.t_n));
  CHECK(g.refinement.back() == doctest::Approx(g.t_n));
  const auto g0 = default_grid(AutocovSpec(100, 1.0, 0.0));
  CHECK(std::abs(g0.t_n - 2.3263) < 1e-3);
  const auto g2 = default_grid(AutocovSpec(100, 1.0, 0.0), 2);
  CHECK(g2.refinement == std::vector<double>{-g2.t_n, g2.t_n});
  CHECK(g2.use_data_levels);
  CHECK_THROWS_AS(default_grid(AutocovSpec(100, 1.0, 1.2)), DegenerateRegimeError);
  CHECK_THROWS_AS(default_grid(AutocovSpec(100, 1.0, 1.0)), DegenerateRegimeError);
}

TEST_CASE("hc hand cases") {
  const auto g = explicit_grid({0.0}, 1.0);
  const std::vector<double> up = {1.0};
  const std::vector<double> down = {-1.0};
  CHECK(hc_statistic(up, g).hc == doctest::Approx(1.0));
  CHECK(hc_statistic(down, g).hc == doctest::Approx(-1.0));
  CHECK(hc_statistic(down, explicit_grid({0.0}, 1.0, 0.0, HcMode::kAbsolute)).hc == doctest::Approx(1.0));
  const std::vector<double> empty;
  CHECK_THROWS_AS(hc_statistic(empty, g), DomainError);
  CHECK_THROWS_AS(hc_statistic(up, explicit_grid({5.0}, 1.0)), EmptyGridError);
  // Count equal to its expectation contributes zero.
  const std::vector<double> two = {-1.0, 1.0};
  CHECK(hc_objective(two, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("hc equals exhaustive evaluation on small inputs") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CounterStream s(stream_key(seed, 1));
    const std::size_t n = 1 + s.next_below(16);
    const std::size_t levels = 1 + s.next_below(64);
    std::vector<double> x(n), grid(levels);
    for (double& v : x) v = 1.5 * s.next_normal();
    for (double& v : grid) v = 4.0 * s.next_uniform() - 2.0;
    std::sort(grid.begin(), grid.end());
    if (seed % 3 == 0 && n > 1) x[1] = x[0];  // ties
    const double t_n = 1.0 + s.next_uniform();
    HCGrid g = explicit_grid(grid, t_n);
    g.use_data_levels = true;
    const double ref = oracle::brute_hc(x, grid, t_n);
    CAPTURE(seed);
    CHECK(hc_statistic(x, g).hc == doctest::Approx(ref).epsilon(1e-12));
    g.mode = HcMode::kAbsolute;
    CHECK(hc_statistic(x, g).hc == doctest::Approx(oracle::brute_hc(x, grid, t_n, true)).epsilon(1e-12));
  }
}

TEST_CASE("hc matches textbook form on iid data with kappa 0") {
  const AutocovSpec spec(2000, 1.0, 0.0);
  const auto g = default_grid(spec, 128);
  const auto x = iid_normals(spec.n(), 3);
  const auto res = hc_statistic(x, g);
  const double ref = oracle::brute_hc(x, g.refinement, g.t_n);
  CHECK(std::abs(res.hc - ref) < 1e-9);
  CHECK(res.hc_normalized == res.hc);
  const bool attained = std::abs(oracle::z_score(x, res.argmax_t) - res.hc) < 1e-9 ||
                        std::abs(oracle::z_score(x, res.argmax_t, false) - res.hc) < 1e-9;
  CHECK(attained);
}

TEST_CASE("normalization and invariances") {
  const AutocovSpec spec(4096, 0.5, 0.1);
  const auto g = default_grid(spec);
  auto x = iid_normals(spec.n(), 5);
  const auto res = hc_statistic(x, g);
  CHECK(res.hc_normalized * std::pow(4096.0, 0.1) == doctest::Approx(res.hc).epsilon(1e-9));
  auto perm = x;
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 1000, perm.end());
  CHECK(hc_statistic(perm, g).hc == res.hc);
  // Shift monotonicity on a fixed grid.
  const auto fixed = explicit_grid(g.refinement, g.t_n, spec.kappa());
  double prev = hc_statistic(x, fixed).hc;
  for (double shift : {0.01, 0.1, 0.5}) {
    auto y = x;
    for (double& v : y) v += shift;
    const double h = hc_statistic(y, fixed).hc;
    CHECK(h >= prev - 1e-12);
    prev = h;
  }
}

TEST_CASE("refinement convergence") {
  const AutocovSpec spec(4096, 0.5, 0.1);
  const auto x = iid_normals(spec.n(), 8);
  const double fine = hc_statistic(x, default_grid(spec, 4096)).hc_normalized;
  for (std::size_t res : {128, 512}) CHECK(std::abs(hc_statistic(x, default_grid(spec, res)).hc_normalized - fine) < 0.05);
}

TEST_CASE("max classifier") {
  const std::vector<double> one = {0.3};
  CHECK(max_classifier(one).decision);
  CHECK(max_classifier(one).threshold == 0.0);
  std::vector<double> hundred(100, 0.0);
  hundred[7] = 3.0;
  const auto rec = max_classifier(hundred);
  CHECK(rec.threshold == doctest::Approx(3.0349).epsilon(1e-4));
  CHECK_FALSE(rec.decision);
  CHECK(rec.normalized == doctest::Approx(3.0 - std::sqrt(2 * std::log(100.0))));
  const std::vector<double> neg(50, -0.1);
  CHECK_FALSE(max_classifier(neg).decision);
  const auto j = to_json(rec);
  CHECK(j["detector"] == "max");
  CHECK(j["decision"] == "no-signal");
}

TEST_CASE("neighbor-difference detector") {
  const std::vector<double> flat(1024, 0.7);
  CHECK_FALSE(ndd_detect(flat, 0.5, 1.0).decision);
  CHECK(ndd_detect(flat, 0.5, 1.0).statistic == 0.0);
  const double thr = 2 * std::sqrt(std::pow(2.0, -5) * std::log(1024.0));
  CHECK(std::abs(thr - 0.93079) < 1e-4);
  CHECK(ndd_detect(flat, 0.5, 1.0).threshold == doctest::Approx(thr));
  auto spike = flat;
  spike[500] += 2 * thr;
  const auto rec = ndd_detect(spike, 0.5, 1.0);
  CHECK(rec.decision);
  CHECK(rec.statistic == doctest::Approx(2 * thr));
  const std::vector<double> single = {1.0};
  CHECK_THROWS_AS(ndd_detect(single, 0.5, 1.0), DomainError);
  CHECK_THROWS_AS(ndd_detect(flat, 0.5, 0.9), DomainError);
}

TEST_CASE("neighbor differences under the null have variance 2 n^-alpha0") {
  const AutocovSpec spec(4096, 1.0, 0.5);
  const auto paths = simulate_paths(spec, 400, 13);
  std::vector<double> per_path;
  for (const auto& p : paths) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < p.values.size(); ++i) acc += std::pow(p.values[i + 1] - p.values[i], 2);
    per_path.push_back(acc / (p.values.size() - 1));
  }
  double m = 0.0, ss = 0.0;
  for (double v : per_path) m += v;
  m /= per_path.size();
  for (double v : per_path) ss += (v - m) * (v - m);
  const double se = std::sqrt(ss / (per_path.size() - 1) / per_path.size());
  CHECK(std::abs(m - 2 * spec.scale()) < 4 * se);
}

TEST_CASE("block partition") {
  const auto p = BlockPartition::from_length(10, 4);
  CHECK(p.starts() == std::vector<std::size_t>{0, 4, 8});
  CHECK(p.count() == 3);
  const AutocovSpec spec(4096, 2.0, 1.2);
  const auto q = BlockPartition::from_exponent(spec, 0.48);
  CHECK(q.block_len() == static_cast<std::size_t>(std::floor(std::pow(4096.0, 0.48))));
  CHECK(q.lambda().value() == 0.48);
  CHECK_THROWS_AS(BlockPartition::from_exponent(spec, 0.6), DomainError);
  CHECK_THROWS_AS(BlockPartition::from_exponent(spec, 0.0), DomainError);
}

TEST_CASE("block constancy hand cases") {
  const std::vector<double> c(12, 0.4);
  CHECK(block_constancy(c, 0.0, BlockPartition::from_length(12, 5)).constant);
  CHECK(block_constancy(c, 1.0, BlockPartition::from_length(12, 5)).constant);
  const auto x = iid_normals(50, 2);
  CHECK(block_constancy(x, 0.0, BlockPartition::from_length(50, 1)).constant);
  const std::vector<double> pm = {1.0, -1.0};
  const auto r = block_constancy(pm, 0.0, BlockPartition::from_length(2, 2));
  CHECK_FALSE(r.constant);
  CHECK(r.agreement == doctest::Approx(0.5));
  CHECK(r.conditioned_blocks == 1);
  CHECK(r.conditional_agreement == doctest::Approx(0.5));
}

TEST_CASE("level exceedance") {
  CHECK(LevelSpec(1.0, 65536).t() == doctest::Approx(4.7096).epsilon(1e-4));
  const LevelSpec l(0.5, 100);
  CHECK(l.t() * l.t() == doctest::Approx(2 * 0.5 * std::log(100.0)));
  const std::vector<double> neg(10, -1.0);
  CHECK_FALSE(level_exceedance(neg, LevelSpec(0.1, 10)));
  const std::vector<double> pos = {-1.0, 0.1};
  CHECK(level_exceedance(pos, LevelSpec(1e-300, 2)));
  CHECK_THROWS_AS(LevelSpec(0.0, 10), DomainError);
}
