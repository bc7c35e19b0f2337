#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "plume/aopt.hpp"
#include "plume/kernel.hpp"
#include "plume/rng.hpp"
#include "plume/sampling.hpp"

using namespace plume;

namespace {

Scenario base_scenario() {
  Scenario sc;
  sc.sources = {{Vec2(3, 8), 0.2}, {Vec2(5, 8), 0.2}, {Vec2(7, 8), 0.2}};
  sc.diffusivity_K = 0.6;
  sc.noise_sigma = 0.3;
  sc.domain_lo = Vec2(0, 0);
  sc.domain_hi = Vec2(10, 10);
  sc.prior_mean = Eigen::Vector3d(8, 10, 9);
  sc.prior_sigma = 4.0;
  sc.elastic_l2 = 1e-4;
  return sc;
}

WindModel north_band() {
  WindModel wm;
  wm.speed_lo = 2.0;
  wm.speed_hi = 3.0;
  wm.dir_lo = -0.3;
  wm.dir_hi = 0.3;
  return wm;
}

SensorLayout random_layout(StreamRng& rng, const Scenario& sc, int n) {
  SensorLayout layout;
  for (int i = 0; i < n; ++i)
    layout.positions.emplace_back(
        rng.uniform(sc.domain_lo.x(), sc.domain_hi.x()),
        rng.uniform(sc.domain_lo.y(), sc.domain_hi.y()));
  return layout;
}

}  // namespace

TEST_CASE("posterior with zero forward map collapses to the prior") {
  Scenario sc = base_scenario();
  const WindVector wind{Vec2(0, -2.5)};  // blowing south; sensors north see nothing
  SensorLayout layout;
  layout.positions = {Vec2(5, 9.5)};  // upwind of every source
  const PosteriorPair post = posterior(sc, wind, layout);
  const Eigen::MatrixXd expected =
      sc.prior_sigma * sc.prior_sigma * Eigen::MatrixXd::Identity(3, 3);
  CHECK((post.gamma_post - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("posterior covariance matches a dense-inverse recomputation") {
  const Scenario sc = base_scenario();
  const WindVector wind{Vec2(0.4, -2.2)};
  StreamRng rng(RngStream{33, 0});
  SensorLayout layout = random_layout(rng, sc, 4);
  const PosteriorPair post = posterior(sc, wind, layout);

  const Eigen::MatrixXd F = forward_matrix(sc, wind, layout);
  const Eigen::MatrixXd precision =
      F.transpose() * F / (sc.noise_sigma * sc.noise_sigma) +
      Eigen::MatrixXd::Identity(3, 3) / (sc.prior_sigma * sc.prior_sigma);
  const Eigen::MatrixXd dense = precision.inverse();
  CHECK((post.gamma_post - dense).cwiseAbs().maxCoeff() < 1e-10);

  // PD preservation: 0 < eigenvalues <= sigma_Pr^2
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(post.gamma_post);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
  CHECK(eig.eigenvalues().maxCoeff() <= sc.prior_sigma * sc.prior_sigma + 1e-12);
}

TEST_CASE("posterior mean interpolates prior and data") {
  const Scenario sc = base_scenario();
  const WindVector wind{Vec2(0.1, -2.0)};
  SensorLayout layout;
  layout.positions = {Vec2(3, 3), Vec2(5, 2), Vec2(7, 3)};
  const Eigen::VectorXd theta = Eigen::Vector3d(9, 11, 8);
  const Eigen::VectorXd phi = forward_matrix(sc, wind, layout) * theta;
  const PosteriorPair post = posterior(sc, wind, layout, phi);
  REQUIRE(post.mu_post.size() == 3);
  // exact recomputation: mu = Gamma (w F' phi + w_pr mu_pr)
  const Eigen::MatrixXd F = forward_matrix(sc, wind, layout);
  const Eigen::VectorXd rhs = F.transpose() * phi / (sc.noise_sigma * sc.noise_sigma) +
                              sc.prior_mean / (sc.prior_sigma * sc.prior_sigma);
  CHECK((post.mu_post - post.gamma_post * rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("risk identity: closed form equals the posterior trace") {
  // Gamma_post (sigma_Pr^-2 I + sigma_eps^-2 F'F) Gamma_post = Gamma_post, so
  // the two Frobenius terms must sum to tr(Gamma_post)
  const Scenario sc = base_scenario();
  StreamRng rng(RngStream{44, 0});
  const WindModel wm = north_band();
  for (int t = 0; t < 10; ++t) {
    const SensorLayout layout = random_layout(rng, const_cast<Scenario&>(sc), 3);
    const WindVector wind =
        WindVector{Vec2(rng.uniform(-0.5, 0.5), -rng.uniform(2.0, 3.0))};
    const double risk = [&] {
      WindModel fixed;
      const double speed = wind.speed();
      fixed.speed_lo = fixed.speed_hi = speed;
      const double dir = std::atan2(wind.beta.x(), -wind.beta.y());
      fixed.dir_lo = fixed.dir_hi = dir;
      return aopt_risk(sc, fixed, layout, 1, 0);
    }();
    const PosteriorPair post = posterior(sc, wind, layout);
    CHECK(std::abs(risk - post.gamma_post.trace()) < 1e-8);
  }
  (void)wm;
}

TEST_CASE("prior-only risk equals N_p sigma_Pr^2") {
  const Scenario sc = base_scenario();
  WindModel south;  // wind toward +y: sensors below all sources see nothing
  south.speed_lo = south.speed_hi = 2.0;
  south.dir_lo = south.dir_hi = M_PI;
  SensorLayout layout;
  layout.positions = {Vec2(5, 2)};
  const double risk = aopt_risk(sc, south, layout, 8, 5);
  CHECK(risk == doctest::Approx(3 * sc.prior_sigma * sc.prior_sigma).epsilon(1e-10));
}

TEST_CASE("closed-form risk matches a brute-force Bayes-risk simulation") {
  const Scenario sc = base_scenario();
  WindModel fixed;
  fixed.speed_lo = fixed.speed_hi = 2.5;
  fixed.dir_lo = fixed.dir_hi = 0.1;
  const WindVector wind = draw_wind(fixed, RngStream{0, 0});
  SensorLayout layout;
  layout.positions = {Vec2(3.2, 3), Vec2(6.8, 2.5)};

  const double closed = aopt_risk(sc, fixed, layout, 1, 0);

  const Eigen::MatrixXd F = forward_matrix(sc, wind, layout);
  StreamRng rng(RngStream{2718, 0});
  const int draws = 100000;
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    Eigen::VectorXd theta(3);
    for (int j = 0; j < 3; ++j)
      theta[j] = sc.prior_mean[j] + sc.prior_sigma * rng.next_normal();
    Eigen::VectorXd phi = F * theta;
    for (Eigen::Index k = 0; k < phi.size(); ++k)
      phi[k] += sc.noise_sigma * rng.next_normal();
    const PosteriorPair post = posterior(sc, wind, layout, phi);
    const double err = (post.mu_post - theta).squaredNorm();
    const double delta = err - mean;
    mean += delta / (i + 1);
    m2 += delta * (err - mean);
  }
  const double se = std::sqrt(m2 / (static_cast<double>(draws) - 1) / draws);
  CHECK(std::abs(mean - closed) <= 3.0 * se);
}

TEST_CASE("risk is invariant under sensor reordering") {
  const Scenario sc = base_scenario();
  const WindModel wm = north_band();
  SensorLayout a;
  a.positions = {Vec2(2, 3), Vec2(5, 2), Vec2(8, 4)};
  SensorLayout b;
  b.positions = {Vec2(8, 4), Vec2(2, 3), Vec2(5, 2)};
  CHECK(aopt_risk(sc, wm, a, 6, 9) ==
        doctest::Approx(aopt_risk(sc, wm, b, 6, 9)).epsilon(1e-12));
}

TEST_CASE("information monotonicity: an extra sensor never hurts the first term") {
  const Scenario sc = base_scenario();
  const WindVector wind{Vec2(0.2, -2.4)};
  StreamRng rng(RngStream{66, 0});
  for (int t = 0; t < 10; ++t) {
    SensorLayout small = random_layout(rng, sc, 2);
    SensorLayout big = small;
    big.positions.push_back(
        Vec2(rng.uniform(0, 10), rng.uniform(0, 10)));
    const double term_small =
        posterior(sc, wind, small).gamma_post.squaredNorm() /
        (sc.prior_sigma * sc.prior_sigma);
    const double term_big = posterior(sc, wind, big).gamma_post.squaredNorm() /
                            (sc.prior_sigma * sc.prior_sigma);
    CHECK(term_big <= term_small + 1e-8);
  }
}

TEST_CASE("annealing never returns worse than its starting layout") {
  const Scenario sc = base_scenario();
  const WindModel wm = north_band();
  AnnealConfig cfg;
  cfg.iterations = 150;
  cfg.restarts = 2;
  cfg.mc_wind_samples = 4;
  SensorLayout start;
  start.positions = {Vec2(1, 9), Vec2(9, 9)};  // deliberately poor: upwind corners
  const AnnealResult res = anneal_layout(sc, wm, 2, cfg, 42, {}, &start);

  // recompute the search objective with the same common wind draws
  const RngStream base{42, 0};
  std::vector<WindVector> winds(cfg.mc_wind_samples);
  for (int i = 0; i < cfg.mc_wind_samples; ++i)
    winds[i] = draw_wind(wm, sample_stream(base, i, DrawPurpose::wind));
  auto risk_of = [&](const SensorLayout& l) {
    double sum = 0.0;
    for (const auto& w : winds) {
      Scenario tmp = sc;
      WindModel fixed;
      fixed.speed_lo = fixed.speed_hi = w.speed();
      fixed.dir_lo = fixed.dir_hi = std::atan2(w.beta.x(), -w.beta.y());
      sum += aopt_risk(tmp, fixed, l, 1, 0);
    }
    return sum / winds.size();
  };
  CHECK(res.risk <= risk_of(start) + 1e-9);
  CHECK(res.risk == doctest::Approx(risk_of(res.layout)).epsilon(1e-9));

  // trace is the running best of the first restart: non-increasing
  for (std::size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i] <= res.trace[i - 1] + 1e-15);
}

TEST_CASE("annealing is deterministic for a fixed seed") {
  const Scenario sc = base_scenario();
  const WindModel wm = north_band();
  AnnealConfig cfg;
  cfg.iterations = 100;
  cfg.restarts = 2;
  cfg.mc_wind_samples = 4;
  const AnnealResult a = anneal_layout(sc, wm, 2, cfg, 7);
  const AnnealResult b = anneal_layout(sc, wm, 2, cfg, 7);
  CHECK(a.risk == b.risk);
  CHECK(a.layout.flat() == b.layout.flat());
  CHECK(a.trace == b.trace);
}

TEST_CASE("1D annealing lands within 5% of a fine grid minimum") {
  Scenario sc = base_scenario();
  sc.sources = {{Vec2(5, 8), 0.2}};
  sc.prior_mean = Eigen::VectorXd::Constant(1, 9.0);
  WindModel wm;
  wm.speed_lo = wm.speed_hi = 2.5;
  wm.dir_lo = wm.dir_hi = 0.0;

  // freeze y = 3; the only free coordinate is the sensor's x
  SensorLayout start;
  start.positions = {Vec2(1, 3)};
  AnnealConfig cfg;
  cfg.iterations = 600;
  cfg.restarts = 3;
  cfg.mc_wind_samples = 1;
  const AnnealResult res = anneal_layout(sc, wm, 1, cfg, 13, {0}, &start);
  CHECK(res.layout.positions[0].y() == 3.0);

  double grid_best = std::numeric_limits<double>::infinity();
  for (int g = 0; g < 1000; ++g) {
    SensorLayout l;
    l.positions = {Vec2(10.0 * g / 999.0, 3.0)};
    grid_best = std::min(grid_best, aopt_risk(sc, wm, l, 1, 13));
  }
  // compare on the same deterministic objective (single fixed wind)
  const double res_risk = aopt_risk(sc, wm, res.layout, 1, 13);
  CHECK(res_risk <= grid_best * 1.05);
}

TEST_CASE("degenerate inputs are rejected") {
  Scenario sc = base_scenario();
  const WindVector wind{Vec2(0, -2)};
  SensorLayout layout;
  layout.positions = {Vec2(5, 3)};
  sc.noise_sigma = 0.0;
  CHECK_THROWS_AS(posterior(sc, wind, layout), std::invalid_argument);
  sc.noise_sigma = 0.3;
  sc.prior_sigma = 0.0;
  CHECK_THROWS_AS(posterior(sc, wind, layout), std::invalid_argument);

  AnnealConfig bad;
  bad.cooling = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
