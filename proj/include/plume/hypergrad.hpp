#pragma once

#include <Eigen/Core>
#include <vector>

#include "plume/qp.hpp"
#include "plume/sampling.hpp"
#include "plume/scenario.hpp"

namespace plume {

/// Below this strict-complementarity margin the implicit Jacobian is flagged
/// unreliable (the optimizer still uses it, but the run report counts flags).
inline constexpr double kComplementarityTol = 1e-8;

/// Derivatives of the inner QP data with respect to every scalar sensor
/// coordinate, ordered (x0, y0, x1, y1, ...).
struct QpSensitivities {
  std::vector<Eigen::MatrixXd> dC_ds;
  std::vector<Eigen::VectorXd> dd_ds;
};

struct ThetaJacobian {
  Eigen::MatrixXd J_theta;    // N_p x 2n
  Eigen::MatrixXd J_eta_bar;  // |active| x 2n
  double complementarity_margin = 0.0;
  bool degenerate = false;  // margin below kComplementarityTol
};

QpSensitivities qp_sensitivities(const Scenario& scenario, const WindVector& wind,
                                 const SensorLayout& layout, const Eigen::VectorXd& phi,
                                 const Eigen::VectorXd& theta);

/// Implicit differentiation of the inner KKT system at `solution`, treating
/// the active set as locally constant. C is factored once and shared across
/// all coordinates.
ThetaJacobian implicit_jacobian(const QpInstance& instance, const QpSensitivities& sens,
                                const QpSolution& solution);

struct OuterGradient {
  Eigen::VectorXd grad;  // 2n
  int degenerate_jacobians = 0;
  int diverged_solves = 0;
  double max_kkt_residual = 0.0;
};

/// Hypergradient of the batch objective: (2/N) sum_i J_i' (theta_hat_i - theta_i).
OuterGradient outer_gradient(const std::vector<SampleTriple>& batch,
                             const SensorLayout& layout, const Scenario& scenario,
                             const InnerConfig& inner_config,
                             std::vector<QpSolution>* warm_starts = nullptr);

}  // namespace plume
