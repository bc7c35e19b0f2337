#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "plume/rng.hpp"
#include "plume/scenario.hpp"

namespace plume {

struct PosteriorPair {
  Eigen::VectorXd mu_post;     // empty unless observations were supplied
  Eigen::MatrixXd gamma_post;  // symmetric positive definite
};

struct AnnealConfig {
  int iterations = 2000;
  double initial_temp = 1.0;   // multiplied by the starting risk
  double cooling = 0.995;      // geometric schedule
  double proposal_sigma = 0.0; // 0 = 5% of the box diagonal
  int restarts = 5;
  int mc_wind_samples = 16;    // wind draws for the risk expectation

  void validate() const;
};

/// Linear-Gaussian posterior for a single wind. Requires noise_sigma > 0.
/// mu_post is computed only when observations are supplied.
PosteriorPair posterior(const Scenario& scenario, const WindVector& wind,
                        const SensorLayout& layout,
                        const std::optional<Eigen::VectorXd>& phi = std::nullopt);

/// Closed-form Bayes risk of the unconstrained MAP estimate, averaged over
/// Monte Carlo wind draws.
double aopt_risk(const Scenario& scenario, const WindModel& wind_model,
                 const SensorLayout& layout, int mc_wind_samples, std::uint64_t seed);

struct AnnealResult {
  SensorLayout layout;
  double risk = 0.0;
  std::vector<double> trace;  // best-so-far risk per iteration (first restart)
};

/// Simulated annealing over the 2n-dimensional box, minimizing aopt_risk
/// with common wind samples so the search objective is deterministic.
/// free_coords empty = all coordinates free.
AnnealResult anneal_layout(const Scenario& scenario, const WindModel& wind_model,
                           int n_sensors, const AnnealConfig& config, std::uint64_t seed,
                           const std::vector<int>& free_coords = {},
                           const SensorLayout* start = nullptr);

}  // namespace plume
