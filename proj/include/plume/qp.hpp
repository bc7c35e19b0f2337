#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "plume/scenario.hpp"

namespace plume {

/// The inner inverse problem min { 1/2 theta' C theta + d theta : theta >= 0 }.
struct QpInstance {
  Eigen::MatrixXd C;  // symmetric positive definite, N_p x N_p
  Eigen::VectorXd d;  // stored as a column; the objective uses d' theta
};

enum class SolveStatus { converged, max_iters, diverged };

struct QpSolution {
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd eta_hat;
  std::vector<int> active_set;  // indices with theta_hat[j] <= active_tol
  double kkt_residual = 0.0;
  int iterations_used = 0;
  SolveStatus status = SolveStatus::converged;
};

struct InnerConfig {
  double gamma = 10.0;        // augmentation penalty
  double tau = 0.0;           // stepsize; 0 = auto from ||C||_2
  int max_iters = 5000;       // J
  double active_tol_scale = 1e-6;  // active_tol = scale * (1 + ||theta||_inf)
  double kkt_tol = 1e-6;
  bool early_exit = true;     // stop once KKT residual clears kkt_tol
};

/// Effective data-fit weight: sigma_eps^-2, or 1 for the noiseless case.
inline double fit_weight(double noise_sigma) {
  return noise_sigma > 0.0 ? 1.0 / (noise_sigma * noise_sigma) : 1.0;
}

/// C = w F'F + lambda1 I, d = lambda2 1 - w F' phi with w = fit_weight.
QpInstance assemble_qp(const Scenario& scenario, const WindVector& wind,
                       const SensorLayout& layout, const Eigen::VectorXd& phi);

QpInstance assemble_qp_from_forward(const Eigen::MatrixXd& F, const Eigen::VectorXd& phi,
                                    double noise_sigma, double l2, double l1);

double qp_objective(const QpInstance& inst, const Eigen::VectorXd& theta);

/// KKT residual recomputed from scratch:
/// max(||C theta + d - eta||_inf, |eta . theta|, ||min(theta,0)||_inf, ||min(eta,0)||_inf)
double kkt_residual(const QpInstance& inst, const Eigen::VectorXd& theta,
                    const Eigen::VectorXd& eta);

/// Augmented primal-dual gradient solver for the inner QP.
QpSolution solve_pd(const QpInstance& instance, const InnerConfig& config,
                    const QpSolution* warm = nullptr);

/// Exact active-set enumeration oracle for small problems (N_p <= 15).
QpSolution solve_enumerate(const QpInstance& instance);

}  // namespace plume
