#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "plume/hypergrad.hpp"
#include "plume/qp.hpp"
#include "plume/sampling.hpp"
#include "plume/scenario.hpp"

namespace plume {

enum class OuterAlgorithm { rsaa, sba };

struct OuterConfig {
  OuterAlgorithm algorithm = OuterAlgorithm::sba;
  int outer_iters = 100;     // M
  int batch_size = 100;      // N tilde
  int runs = 1;              // K (rSAA only)
  double rho0 = 1e-4;        // outer stepsize
  bool decaying_rho = false; // rho_m = rho0 / (m + 1)
  int eval_N = 10000;        // large-N re-evaluation budget
  double alpha = 0.025;      // confidence level for the gap certificate
  int trace_every = 10;      // 0 disables periodic re-evaluation
  bool warm_start = true;    // carry inner solutions across outer iterations
  bool align_runs = false;   // match sensors across runs before averaging
  bool random_iterate = false;  // pick s_M = s_m with prob 1/(A_M (m+1))
  InnerConfig inner;
  // empty = all coordinates free; otherwise flat coordinate indices that may move
  std::vector<int> free_coords;
};

struct GapCertificate {
  double upper = 0.0;  // Psi_N + z_alpha sigma_N
  double lower = 0.0;  // Psi_bar - t_alpha sigma_{N~,K}
  double delta = 0.0;  // upper - lower
  double z_alpha = 0.0;
  double t_alpha = 0.0;
  double psi_N = 0.0;
  double sigma_N = 0.0;
  double psi_bar = 0.0;
  double sigma_K = 0.0;
  int K_used = 0;
};

struct TracePoint {
  int m = 0;
  double psi_hat = 0.0;
  double std_err = 0.0;
  int eval_N = 0;
};

struct PerRunSolution {
  SensorLayout layout;
  double psi_value = 0.0;  // small-batch objective at the run's final layout
  bool failed = false;
};

struct RunDiagnostics {
  int clamped_steps = 0;
  int degenerate_jacobians = 0;
  int diverged_solves = 0;
  bool aborted = false;
};

struct RunReport {
  std::vector<SensorLayout> iterates;  // trajectory (first run, for rSAA)
  std::vector<TracePoint> objective_trace;
  std::vector<double> gradient_norm_trace;
  std::vector<PerRunSolution> per_run;  // rSAA only
  SensorLayout combined;
  std::optional<GapCertificate> gap;
  RunDiagnostics diagnostics;
  std::vector<std::uint64_t> batch_stream_ids;  // one per resampling event
  double wall_time_s = 0.0;
};

/// Componentwise clamp of s - rho * grad to the box.
SensorLayout projected_step(const SensorLayout& layout, const Eigen::VectorXd& gradient,
                            double rho, const Vec2& box_lo, const Vec2& box_hi);

RunReport run_sba(const Scenario& scenario, const WindModel& wind_model,
                  const OuterConfig& config, const SensorLayout& init,
                  std::uint64_t seed);

/// K independent fixed-batch runs combined by the componentwise mean, with a
/// gap certificate when K >= 2.
RunReport run_rsaa(const Scenario& scenario, const WindModel& wind_model,
                   const OuterConfig& config, const std::vector<SensorLayout>& inits,
                   std::uint64_t seed);

GapCertificate gap_bound(const std::vector<double>& per_run_values,
                         const SensorLayout& combined_layout, const Scenario& scenario,
                         const WindModel& wind_model, int eval_N, double alpha,
                         const InnerConfig& inner, std::uint64_t seed);

struct GridPoint {
  Eigen::VectorXd coords;  // values of the free coordinates
  double psi_hat = 0.0;
  double std_err = 0.0;
};

struct GridOracleResult {
  SensorLayout best_layout;
  GridPoint best;
  std::vector<GridPoint> curve;
};

/// Exhaustive sweep over at most 2 free scalar coordinates, evaluated with
/// common random numbers across grid points.
GridOracleResult grid_oracle(const Scenario& scenario, const WindModel& wind_model,
                             const SensorLayout& layout_template,
                             const std::vector<int>& free_coords, int points_per_axis,
                             int eval_N, const InnerConfig& inner, std::uint64_t seed);

}  // namespace plume
