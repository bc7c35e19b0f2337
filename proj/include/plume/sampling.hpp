#pragma once

#include <Eigen/Core>
#include <vector>

#include "plume/kernel.hpp"
#include "plume/qp.hpp"
#include "plume/rng.hpp"
#include "plume/scenario.hpp"

namespace plume {

/// One Monte Carlo draw: emissions, wind, and the observations synthesized
/// at the layout that was current when the triple was drawn. The phi vector
/// is data; it stays fixed when the layout is later perturbed.
struct SampleTriple {
  Eigen::VectorXd theta;
  WindVector beta;
  Eigen::VectorXd phi;
};

/// Stream purpose tags; keep stable, they define the reproducibility contract.
enum class DrawPurpose : std::uint64_t {
  wind = 1,
  emissions = 2,
  noise = 3,
  init = 4,
  proposal = 5,
};

inline RngStream sample_stream(RngStream base, std::uint64_t i, DrawPurpose p) {
  return substream(base, i, 0, 0, static_cast<std::uint64_t>(p));
}

WindVector draw_wind(const WindModel& model, RngStream stream);

/// Componentwise one-sided (at zero) truncation of N(mu_pr, sigma_Pr^2 I).
Eigen::VectorXd draw_emissions(const Scenario& scenario, RngStream stream);

std::vector<SampleTriple> draw_batch(const Scenario& scenario, const WindModel& wind_model,
                                     const SensorLayout& layout, int count,
                                     RngStream stream_base);

struct ObjectiveValue {
  double psi_hat = 0.0;
  Eigen::VectorXd per_sample;
  double std_err = 0.0;
};

/// Monte Carlo design objective: mean squared recovery error over `count`
/// fresh samples drawn at this layout. OpenMP-parallel over samples with a
/// fixed-order reduction.
ObjectiveValue evaluate_objective(const Scenario& scenario, const WindModel& wind_model,
                                  const SensorLayout& layout, int count,
                                  RngStream stream_base, const InnerConfig& qp_config);

/// Serial reference for evaluate_objective; must be bit-identical.
ObjectiveValue evaluate_objective_serial(const Scenario& scenario,
                                         const WindModel& wind_model,
                                         const SensorLayout& layout, int count,
                                         RngStream stream_base,
                                         const InnerConfig& qp_config);

/// Mean squared recovery error on an existing batch (phi held fixed, the
/// forward map re-assembled at `layout`). Used by the optimizers and the
/// fixed-sample finite-difference oracles.
double objective_on_batch(const Scenario& scenario, const SensorLayout& layout,
                          const std::vector<SampleTriple>& batch,
                          const InnerConfig& qp_config);

}  // namespace plume
