#include "plume/aopt.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "plume/kernel.hpp"
#include "plume/sampling.hpp"

namespace plume {

void AnnealConfig::validate() const {
  throw_if(iterations < 1, "anneal: iterations must be >= 1");
  throw_if(!(cooling > 0.0 && cooling < 1.0), "anneal: cooling must be in (0,1)");
  throw_if(initial_temp <= 0.0, "anneal: initial_temp must be positive");
  throw_if(restarts < 1, "anneal: restarts must be >= 1");
  throw_if(mc_wind_samples < 1, "anneal: mc_wind_samples must be >= 1");
}

PosteriorPair posterior(const Scenario& scenario, const WindVector& wind,
                        const SensorLayout& layout,
                        const std::optional<Eigen::VectorXd>& phi) {
  throw_if(scenario.noise_sigma <= 0.0, "posterior: requires noise_sigma > 0");
  throw_if(scenario.prior_sigma <= 0.0, "posterior: requires prior_sigma > 0");
  validate_layout(scenario, layout);
  const int np = scenario.num_sources();
  const double w_eps = 1.0 / (scenario.noise_sigma * scenario.noise_sigma);
  const double w_pr = 1.0 / (scenario.prior_sigma * scenario.prior_sigma);

  const Eigen::MatrixXd F = forward_matrix(scenario, wind, layout);
  const Eigen::MatrixXd precision =
      w_eps * (F.transpose() * F) + w_pr * Eigen::MatrixXd::Identity(np, np);
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  throw_if(llt.info() != Eigen::Success, "posterior: precision not positive definite");

  PosteriorPair post;
  post.gamma_post = llt.solve(Eigen::MatrixXd::Identity(np, np));
  if (phi) {
    throw_if(phi->size() != layout.size(), "posterior: observation size mismatch");
    post.mu_post = llt.solve(w_eps * (F.transpose() * *phi) + w_pr * scenario.prior_mean);
  }
  return post;
}

namespace {

double risk_single_wind(const Scenario& scenario, const WindVector& wind,
                        const SensorLayout& layout) {
  const PosteriorPair post = posterior(scenario, wind, layout);
  const Eigen::MatrixXd F = forward_matrix(scenario, wind, layout);
  // L = sigma_Pr^-1 I and U = sigma_eps^-1 I, so the two Frobenius terms
  // reduce to scaled norms of Gamma_post and Gamma_post F'
  const double t1 = post.gamma_post.squaredNorm() /
                    (scenario.prior_sigma * scenario.prior_sigma);
  const double t2 = (post.gamma_post * F.transpose()).squaredNorm() /
                    (scenario.noise_sigma * scenario.noise_sigma);
  return t1 + t2;
}

}  // namespace

double aopt_risk(const Scenario& scenario, const WindModel& wind_model,
                 const SensorLayout& layout, int mc_wind_samples, std::uint64_t seed) {
  throw_if(mc_wind_samples < 1, "aopt_risk: needs at least one wind sample");
  const RngStream base{seed, 0};
  double sum = 0.0;
  for (int i = 0; i < mc_wind_samples; ++i) {
    const WindVector wind = draw_wind(wind_model, sample_stream(base, i, DrawPurpose::wind));
    sum += risk_single_wind(scenario, wind, layout);
  }
  return sum / static_cast<double>(mc_wind_samples);
}

AnnealResult anneal_layout(const Scenario& scenario, const WindModel& wind_model,
                           int n_sensors, const AnnealConfig& config, std::uint64_t seed,
                           const std::vector<int>& free_coords,
                           const SensorLayout* start) {
  scenario.validate();
  wind_model.validate();
  config.validate();
  throw_if(n_sensors < 1, "anneal_layout: needs at least one sensor");

  const RngStream base{seed, 0};
  // fixed wind draws shared by every candidate: the search objective is a
  // deterministic function of the layout
  std::vector<WindVector> winds(config.mc_wind_samples);
  for (int i = 0; i < config.mc_wind_samples; ++i)
    winds[i] = draw_wind(wind_model, sample_stream(base, i, DrawPurpose::wind));

  auto risk_of = [&](const SensorLayout& layout) {
    double sum = 0.0;
    for (const WindVector& w : winds) sum += risk_single_wind(scenario, w, layout);
    return sum / static_cast<double>(winds.size());
  };

  const Vec2 extent = scenario.domain_hi - scenario.domain_lo;
  const double prop_sigma =
      config.proposal_sigma > 0.0 ? config.proposal_sigma : 0.05 * extent.norm();

  auto is_free = [&](int coord) {
    return free_coords.empty() ||
           std::find(free_coords.begin(), free_coords.end(), coord) != free_coords.end();
  };

  AnnealResult best;
  best.risk = std::numeric_limits<double>::infinity();

  for (int r = 0; r < config.restarts; ++r) {
    StreamRng rng(substream(base, static_cast<std::uint64_t>(r), 0, 0,
                            static_cast<std::uint64_t>(DrawPurpose::proposal)));
    SensorLayout current;
    if (start && r == 0) {
      current = *start;
    } else {
      current.positions.resize(n_sensors);
      for (int i = 0; i < n_sensors; ++i)
        current.positions[i] =
            Vec2(rng.uniform(scenario.domain_lo.x(), scenario.domain_hi.x()),
                 rng.uniform(scenario.domain_lo.y(), scenario.domain_hi.y()));
      if (!free_coords.empty() && start)
        for (int i = 0; i < n_sensors; ++i)
          for (int c = 0; c < 2; ++c)
            if (!is_free(2 * i + c)) current.positions[i][c] = start->positions[i][c];
    }
    double current_risk = risk_of(current);

    SensorLayout local_best = current;
    double local_best_risk = current_risk;
    double temp = config.initial_temp * std::max(current_risk, 1e-300);

    for (int t = 0; t < config.iterations; ++t) {
      SensorLayout proposal = current;
      for (int i = 0; i < n_sensors; ++i) {
        for (int c = 0; c < 2; ++c) {
          const double step = prop_sigma * rng.next_normal();
          if (!is_free(2 * i + c)) continue;
          proposal.positions[i][c] =
              std::clamp(proposal.positions[i][c] + step, scenario.domain_lo[c],
                         scenario.domain_hi[c]);
        }
      }
      const double proposal_risk = risk_of(proposal);
      const double diff = proposal_risk - current_risk;
      if (diff <= 0.0 || rng.next_double() < std::exp(-diff / temp)) {
        current = proposal;
        current_risk = proposal_risk;
      }
      if (current_risk < local_best_risk) {
        local_best = current;
        local_best_risk = current_risk;
      }
      if (r == 0) best.trace.push_back(local_best_risk);
      temp *= config.cooling;
    }
    if (local_best_risk < best.risk) {
      best.layout = local_best;
      best.risk = local_best_risk;
    }
  }
  return best;
}

}  // namespace plume
