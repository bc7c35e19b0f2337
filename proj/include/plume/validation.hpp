#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "plume/qp.hpp"
#include "plume/scenario.hpp"

namespace plume {

struct NamedLayout {
  std::string name;
  SensorLayout layout;
};

struct SourceQuartiles {
  double est_q1 = 0.0, est_med = 0.0, est_q3 = 0.0;
  double true_q1 = 0.0, true_med = 0.0, true_q3 = 0.0;
};

struct NoiseSweepCell {
  double noise_sigma = 0.0;
  double prior_sigma = 0.0;
  double mean_error = 0.0;  // mean ||theta_hat - theta|| over trials
};

struct DesignReport {
  std::string name;
  double mape_percent = 0.0;
  std::vector<SourceQuartiles> per_source;
  std::vector<NoiseSweepCell> noise_sweep;
};

struct ValidationReport {
  std::vector<DesignReport> designs;
  int trials = 0;
};

struct ValidationOptions {
  int trials = 1000;
  InnerConfig inner;
  // multipliers applied to the scenario's noise_sigma / prior_sigma for the
  // sensitivity sweep; sweep trials are a fraction of the main trial count
  std::vector<double> noise_multipliers{0.5, 1.0, 2.0};
  std::vector<double> prior_multipliers{0.5, 1.0, 2.0};
  int sweep_trials = 200;
};

/// Guards exact-zero true emissions in the MAPE denominator.
inline constexpr double kMapeFloor = 1e-6;

/// For each design: draw trials scenarios, invert, and summarize recovery
/// quality. All designs see identical sample streams.
ValidationReport validate_designs(const Scenario& scenario, const WindModel& wind_model,
                                  const std::vector<NamedLayout>& designs,
                                  const ValidationOptions& options, std::uint64_t seed);

}  // namespace plume
