#include "plume/qp.hpp"

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <limits>

#include "plume/kernel.hpp"

namespace plume {

QpInstance assemble_qp_from_forward(const Eigen::MatrixXd& F, const Eigen::VectorXd& phi,
                                    double noise_sigma, double l2, double l1) {
  throw_if(F.rows() != phi.size(), "assemble_qp: observation size mismatch");
  const double w = fit_weight(noise_sigma);
  const Eigen::Index np = F.cols();
  QpInstance inst;
  inst.C = w * (F.transpose() * F) + l2 * Eigen::MatrixXd::Identity(np, np);
  inst.d = l1 * Eigen::VectorXd::Ones(np) - w * (F.transpose() * phi);
  return inst;
}

QpInstance assemble_qp(const Scenario& scenario, const WindVector& wind,
                       const SensorLayout& layout, const Eigen::VectorXd& phi) {
  validate_layout(scenario, layout);
  return assemble_qp_from_forward(forward_matrix(scenario, wind, layout), phi,
                                  scenario.noise_sigma, scenario.elastic_l2,
                                  scenario.elastic_l1);
}

double qp_objective(const QpInstance& inst, const Eigen::VectorXd& theta) {
  return 0.5 * theta.dot(inst.C * theta) + inst.d.dot(theta);
}

double kkt_residual(const QpInstance& inst, const Eigen::VectorXd& theta,
                    const Eigen::VectorXd& eta) {
  const double stationarity =
      (inst.C * theta + inst.d - eta).cwiseAbs().maxCoeff();
  const double complementarity = std::abs(eta.dot(theta));
  const double theta_feas = theta.cwiseMin(0.0).cwiseAbs().maxCoeff();
  const double eta_feas = eta.cwiseMin(0.0).cwiseAbs().maxCoeff();
  return std::max(std::max(stationarity, complementarity),
                  std::max(theta_feas, eta_feas));
}

namespace {

double spectral_norm_estimate(const Eigen::MatrixXd& C) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(C.rows()).normalized();
  double norm = 0.0;
  for (int it = 0; it < 20; ++it) {
    v = C * v;
    norm = v.norm();
    if (norm == 0.0) return 0.0;
    v /= norm;
  }
  return norm;
}

std::vector<int> detect_active(const Eigen::VectorXd& theta, double tol_scale) {
  const double tol = tol_scale * (1.0 + theta.cwiseAbs().maxCoeff());
  std::vector<int> active;
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    if (theta[j] <= tol) active.push_back(static_cast<int>(j));
  return active;
}

}  // namespace

QpSolution solve_pd(const QpInstance& instance, const InnerConfig& config,
                    const QpSolution* warm) {
  const Eigen::Index np = instance.C.rows();
  throw_if(instance.C.cols() != np || instance.d.size() != np,
           "solve_pd: inconsistent instance dimensions");

  const double gamma = config.gamma;
  const double tau = config.tau > 0.0
                         ? config.tau
                         : 0.9 / (spectral_norm_estimate(instance.C) + gamma);

  Eigen::VectorXd theta = warm ? warm->theta_hat : Eigen::VectorXd::Zero(np);
  Eigen::VectorXd eta = warm ? warm->eta_hat : Eigen::VectorXd::Zero(np);

  QpSolution sol;
  int iters = 0;
  for (int j = 0; j < config.max_iters; ++j) {
    // [gamma(-theta) + eta]_+ appears in both gradients
    const Eigen::VectorXd slack = (-gamma * theta + eta).cwiseMax(0.0);
    const Eigen::VectorXd grad_theta = instance.C * theta + instance.d - slack;
    const Eigen::VectorXd grad_eta = (slack - eta) / gamma;
    theta = (theta - tau * grad_theta).cwiseMax(0.0);
    eta = (eta + tau * grad_eta).cwiseMax(0.0);
    iters = j + 1;
    if (!theta.allFinite() || !eta.allFinite()) {
      sol.status = SolveStatus::diverged;
      sol.theta_hat = Eigen::VectorXd::Zero(np);
      sol.eta_hat = Eigen::VectorXd::Zero(np);
      sol.iterations_used = iters;
      sol.kkt_residual = std::numeric_limits<double>::infinity();
      return sol;
    }
    if (config.early_exit && (j + 1) % 50 == 0 &&
        kkt_residual(instance, theta,
                     (instance.C * theta + instance.d).cwiseMax(0.0)) <=
            config.kkt_tol)
      break;
  }

  // The dual iterate only tracks the multipliers up to the constraint slack;
  // the exact multipliers at the primal point are the clipped gradient.
  sol.theta_hat = std::move(theta);
  sol.eta_hat = (instance.C * sol.theta_hat + instance.d).cwiseMax(0.0);
  sol.kkt_residual = kkt_residual(instance, sol.theta_hat, sol.eta_hat);
  sol.iterations_used = iters;
  sol.status = sol.kkt_residual <= config.kkt_tol ? SolveStatus::converged
                                                  : SolveStatus::max_iters;
  sol.active_set = detect_active(sol.theta_hat, config.active_tol_scale);
  return sol;
}

QpSolution solve_enumerate(const QpInstance& instance) {
  const int np = static_cast<int>(instance.C.rows());
  throw_if(np > 15, "solve_enumerate: N_p too large for enumeration");
  throw_if(instance.C.cols() != np || instance.d.size() != np,
           "solve_enumerate: inconsistent instance dimensions");

  QpSolution best;
  double best_obj = std::numeric_limits<double>::infinity();
  int best_popcount = np + 1;
  unsigned best_mask = 0;
  bool found = false;
  const double feas_tol = 1e-11;

  for (unsigned mask = 0; mask < (1u << np); ++mask) {
    // mask bit j set -> constraint j active (theta_j = 0)
    std::vector<int> inactive, active;
    for (int j = 0; j < np; ++j)
      (mask >> j & 1u) ? active.push_back(j) : inactive.push_back(j);

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(np);
    if (!inactive.empty()) {
      const Eigen::Index ni = static_cast<Eigen::Index>(inactive.size());
      Eigen::MatrixXd Cii(ni, ni);
      Eigen::VectorXd di(ni);
      for (Eigen::Index a = 0; a < ni; ++a) {
        di[a] = instance.d[inactive[a]];
        for (Eigen::Index b = 0; b < ni; ++b)
          Cii(a, b) = instance.C(inactive[a], inactive[b]);
      }
      const Eigen::VectorXd ti = Cii.ldlt().solve(-di);
      bool ok = true;
      for (Eigen::Index a = 0; a < ni; ++a) {
        if (ti[a] < -feas_tol * (1.0 + ti.cwiseAbs().maxCoeff())) ok = false;
        theta[inactive[a]] = std::max(ti[a], 0.0);
      }
      if (!ok) continue;
    }

    Eigen::VectorXd eta = Eigen::VectorXd::Zero(np);
    const Eigen::VectorXd grad = instance.C * theta + instance.d;
    bool ok = true;
    for (int j : active) {
      eta[j] = grad[j];
      if (eta[j] < -feas_tol * (1.0 + grad.cwiseAbs().maxCoeff())) ok = false;
      eta[j] = std::max(eta[j], 0.0);
    }
    if (!ok) continue;

    const double obj = qp_objective(instance, theta);
    const double tie = 1e-12 * (1.0 + std::abs(obj));
    const int pc = std::popcount(mask);
    const bool better =
        !found || obj < best_obj - tie ||
        (obj <= best_obj + tie &&
         (pc < best_popcount || (pc == best_popcount && mask < best_mask)));
    if (better) {
      found = true;
      best_obj = std::min(best_obj, obj);
      best_popcount = pc;
      best_mask = mask;
      best.theta_hat = theta;
      best.eta_hat = eta;
      best.active_set = active;
    }
  }

  throw_if(!found, "solve_enumerate: no feasible candidate (non-PD instance?)");
  best.kkt_residual = kkt_residual(instance, best.theta_hat, best.eta_hat);
  best.iterations_used = 1 << np;
  best.status = SolveStatus::converged;
  return best;
}

}  // namespace plume
