#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <set>

#include "plume/outer.hpp"

using namespace plume;

namespace {

Scenario line_scenario() {
  Scenario sc;
  sc.sources = {{Vec2(3.5, 8), 0.0}, {Vec2(5, 8), 0.0}, {Vec2(6.5, 8), 0.0}};
  sc.diffusivity_K = 0.5;
  sc.noise_sigma = 1.0;
  sc.domain_lo = Vec2(0, 0);
  sc.domain_hi = Vec2(10, 10);
  sc.prior_mean = Eigen::Vector3d(80, 60, 40);
  sc.prior_sigma = 0.0;
  sc.elastic_l2 = 1e-4;
  sc.elastic_l1 = 0.0;
  return sc;
}

WindModel fixed_north() {
  WindModel wm;
  wm.speed_lo = wm.speed_hi = 5.0;
  wm.dir_lo = wm.dir_hi = 0.0;
  return wm;
}

OuterConfig small_config() {
  OuterConfig cfg;
  cfg.outer_iters = 5;
  cfg.batch_size = 4;
  cfg.runs = 3;
  cfg.rho0 = 1e-6;
  cfg.eval_N = 50;
  cfg.trace_every = 5;
  cfg.inner.max_iters = 3000;
  return cfg;
}

}  // namespace

TEST_CASE("projected step clamps componentwise to the box") {
  SensorLayout layout;
  layout.positions = {Vec2(1, 9), Vec2(5, 5)};
  Eigen::VectorXd grad(4);
  grad << 100, -100, 0.5, 0.0;
  const SensorLayout next = projected_step(layout, grad, 0.1, Vec2(0, 0), Vec2(10, 10));
  CHECK(next.positions[0] == Vec2(0, 10));        // both coordinates clamped
  CHECK(next.positions[1].x() == doctest::Approx(4.95));
  CHECK(next.positions[1].y() == 5.0);

  Eigen::VectorXd bad(4);
  bad << 1, 2, std::nan(""), 0;
  CHECK_THROWS_AS(projected_step(layout, bad, 0.1, Vec2(0, 0), Vec2(10, 10)),
                  std::invalid_argument);
  CHECK_THROWS_AS(projected_step(layout, Eigen::VectorXd::Zero(3), 0.1, Vec2(0, 0),
                                 Vec2(10, 10)),
                  std::invalid_argument);
}

TEST_CASE("SBA resamples a fresh batch every outer iteration") {
  const Scenario sc = line_scenario();
  const WindModel wm = fixed_north();
  OuterConfig cfg = small_config();
  SensorLayout init;
  init.positions = {Vec2(5, 4)};
  const RunReport rep = run_sba(sc, wm, cfg, init, 17);
  CHECK(static_cast<int>(rep.batch_stream_ids.size()) == cfg.outer_iters);
  const std::set<std::uint64_t> unique(rep.batch_stream_ids.begin(),
                                       rep.batch_stream_ids.end());
  CHECK(unique.size() == rep.batch_stream_ids.size());
  CHECK(static_cast<int>(rep.iterates.size()) == cfg.outer_iters + 1);
  CHECK_FALSE(rep.gap.has_value());
}

TEST_CASE("rSAA fixes one batch per run and reuses it across iterations") {
  const Scenario sc = line_scenario();
  const WindModel wm = fixed_north();
  OuterConfig cfg = small_config();
  cfg.algorithm = OuterAlgorithm::rsaa;
  SensorLayout init;
  init.positions = {Vec2(5, 4)};
  const RunReport rep = run_rsaa(sc, wm, cfg, {init}, 17);
  // exactly one resampling event per run, independent of M
  CHECK(static_cast<int>(rep.batch_stream_ids.size()) == cfg.runs);
  const std::set<std::uint64_t> unique(rep.batch_stream_ids.begin(),
                                       rep.batch_stream_ids.end());
  CHECK(unique.size() == rep.batch_stream_ids.size());
  CHECK(static_cast<int>(rep.per_run.size()) == cfg.runs);
  CHECK(rep.gap.has_value());
}

TEST_CASE("rSAA combined layout is the componentwise run mean") {
  const Scenario sc = line_scenario();
  const WindModel wm = fixed_north();
  OuterConfig cfg = small_config();
  cfg.algorithm = OuterAlgorithm::rsaa;
  SensorLayout init;
  init.positions = {Vec2(5, 4)};
  const RunReport rep = run_rsaa(sc, wm, cfg, {init}, 4);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (const auto& r : rep.per_run) mean += r.layout.flat();
  mean /= static_cast<double>(rep.per_run.size());
  CHECK((rep.combined.flat() - mean).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("single-run rSAA returns that run unchanged, without a certificate") {
  const Scenario sc = line_scenario();
  const WindModel wm = fixed_north();
  OuterConfig cfg = small_config();
  cfg.algorithm = OuterAlgorithm::rsaa;
  cfg.runs = 1;
  SensorLayout init;
  init.positions = {Vec2(4, 3)};
  const RunReport rep = run_rsaa(sc, wm, cfg, {init}, 5);
  CHECK(rep.per_run.size() == 1);
  CHECK(rep.combined.flat() == rep.per_run[0].layout.flat());
  CHECK_FALSE(rep.gap.has_value());
}

TEST_CASE("outer drivers are deterministic for a fixed seed") {
  const Scenario sc = line_scenario();
  const WindModel wm = fixed_north();
  OuterConfig cfg = small_config();
  SensorLayout init;
  init.positions = {Vec2(5, 4)};
  const RunReport a = run_sba(sc, wm, cfg, init, 123);
  const RunReport b = run_sba(sc, wm, cfg, init, 123);
  CHECK(a.combined.flat() == b.combined.flat());
  for (std::size_t m = 0; m < a.iterates.size(); ++m)
    CHECK(a.iterates[m].flat() == b.iterates[m].flat());
  const RunReport c = run_sba(sc, wm, cfg, init, 124);
  CHECK(a.combined.flat() != c.combined.flat());
}

TEST_CASE("gap certificate recomputes exactly from its fields") {
  const Scenario sc = line_scenario();
  const WindModel wm = fixed_north();
  SensorLayout layout;
  layout.positions = {Vec2(5, 4)};
  const std::vector<double> psis{10.0, 12.5, 9.0, 11.0, 13.5};
  const GapCertificate cert =
      gap_bound(psis, layout, sc, wm, 200, 0.025, InnerConfig{}, 7);

  // re-derive every derived field from the primitives
  double mean = 0.0;
  for (double v : psis) mean += v;
  mean /= psis.size();
  double ss = 0.0;
  for (double v : psis) ss += (v - mean) * (v - mean);
  const double sigma_k = std::sqrt(ss / (psis.size() * (psis.size() - 1.0)));
  CHECK(cert.psi_bar == doctest::Approx(mean).epsilon(1e-14));
  CHECK(cert.sigma_K == doctest::Approx(sigma_k).epsilon(1e-14));
  CHECK(cert.K_used == 5);
  CHECK(cert.z_alpha ==
        doctest::Approx(boost::math::quantile(boost::math::normal_distribution<double>(),
                                              0.975))
            .epsilon(1e-14));
  CHECK(cert.t_alpha ==
        doctest::Approx(
            boost::math::quantile(boost::math::students_t_distribution<double>(4), 0.975))
            .epsilon(1e-14));
  CHECK(cert.upper == cert.psi_N + cert.z_alpha * cert.sigma_N);
  CHECK(cert.lower == cert.psi_bar - cert.t_alpha * cert.sigma_K);
  CHECK(cert.delta == cert.upper - cert.lower);
  CHECK_THROWS_AS(gap_bound({1.0}, layout, sc, wm, 200, 0.025, InnerConfig{}, 7),
                  std::invalid_argument);
}

TEST_CASE("grid oracle minimizes its own curve and keeps common random numbers") {
  const Scenario sc = line_scenario();
  const WindModel wm = fixed_north();
  SensorLayout tmpl;
  tmpl.positions = {Vec2(5, 4)};
  const GridOracleResult res =
      grid_oracle(sc, wm, tmpl, {0}, 21, 40, InnerConfig{}, 3);
  REQUIRE(res.curve.size() == 21);
  double best = res.curve[0].psi_hat;
  for (const auto& p : res.curve) best = std::min(best, p.psi_hat);
  CHECK(res.best.psi_hat == best);
  CHECK(res.best_layout.positions[0].x() == res.best.coords[0]);
  CHECK(res.best_layout.positions[0].y() == 4.0);  // frozen coordinate untouched

  // grid endpoints span the domain axis exactly
  CHECK(res.curve.front().coords[0] == sc.domain_lo.x());
  CHECK(res.curve.back().coords[0] == sc.domain_hi.x());

  // identical seed -> identical curve (common random numbers)
  const GridOracleResult res2 =
      grid_oracle(sc, wm, tmpl, {0}, 21, 40, InnerConfig{}, 3);
  for (std::size_t g = 0; g < res.curve.size(); ++g)
    CHECK(res.curve[g].psi_hat == res2.curve[g].psi_hat);

  CHECK_THROWS_AS(grid_oracle(sc, wm, tmpl, {}, 21, 40, InnerConfig{}, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(grid_oracle(sc, wm, tmpl, {0, 1, 2}, 21, 40, InnerConfig{}, 3),
                  std::invalid_argument);
}

TEST_CASE("two-dimensional grid oracle sweeps both coordinates") {
  const Scenario sc = line_scenario();
  const WindModel wm = fixed_north();
  SensorLayout tmpl;
  tmpl.positions = {Vec2(5, 4)};
  const GridOracleResult res =
      grid_oracle(sc, wm, tmpl, {0, 1}, 5, 30, InnerConfig{}, 3);
  CHECK(res.curve.size() == 25);
  std::set<double> xs, ys;
  for (const auto& p : res.curve) {
    xs.insert(p.coords[0]);
    ys.insert(p.coords[1]);
  }
  CHECK(xs.size() == 5);
  CHECK(ys.size() == 5);
}

TEST_CASE("coordinate mask freezes the pinned coordinates") {
  const Scenario sc = line_scenario();
  const WindModel wm = fixed_north();
  OuterConfig cfg = small_config();
  cfg.rho0 = 1e-5;
  cfg.free_coords = {0};  // x of the single sensor; y must stay put
  SensorLayout init;
  init.positions = {Vec2(5, 4)};
  const RunReport rep = run_sba(sc, wm, cfg, init, 11);
  for (const auto& it : rep.iterates) CHECK(it.positions[0].y() == 4.0);
}
