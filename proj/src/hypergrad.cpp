#include "plume/hypergrad.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "plume/kernel.hpp"

namespace plume {

QpSensitivities qp_sensitivities(const Scenario& scenario, const WindVector& wind,
                                 const SensorLayout& layout, const Eigen::VectorXd& phi,
                                 const Eigen::VectorXd& theta) {
  validate_layout(scenario, layout);
  const int n = layout.size();
  const int np = scenario.num_sources();
  throw_if(phi.size() != n, "qp_sensitivities: phi size mismatch");
  throw_if(theta.size() != np, "qp_sensitivities: theta size mismatch");
  const double w = fit_weight(scenario.noise_sigma);
  const double K = scenario.diffusivity_K;
  const bool uf = scenario.kernel_wind_speed_factor;

  QpSensitivities sens;
  sens.dC_ds.assign(2 * n, Eigen::MatrixXd::Zero(np, np));
  sens.dd_ds.assign(2 * n, Eigen::VectorXd::Zero(np));

  // coordinate k of sensor i only touches row i of F, so each coordinate's
  // blocks are assembled from that sensor's kernel gradients alone
  for (int i = 0; i < n; ++i) {
    const Vec2& s = layout.positions[i];
    for (int m = 0; m < np; ++m) {
      const Vec2 gm = kernel_gradients(scenario.sources[m], s, wind, K, uf);
      for (int c = 0; c < 2; ++c) sens.dd_ds[2 * i + c][m] = -w * phi[i] * gm[c];
      for (int nn = m; nn < np; ++nn) {
        const Vec2 gp = product_kernel_gradients(scenario.sources[m], scenario.sources[nn],
                                                 s, wind, K, uf);
        for (int c = 0; c < 2; ++c) {
          sens.dC_ds[2 * i + c](m, nn) += w * gp[c];
          if (nn != m) sens.dC_ds[2 * i + c](nn, m) += w * gp[c];
        }
      }
    }
  }
  return sens;
}

ThetaJacobian implicit_jacobian(const QpInstance& instance, const QpSensitivities& sens,
                                const QpSolution& solution) {
  const Eigen::Index np = instance.C.rows();
  const int ncoord = static_cast<int>(sens.dC_ds.size());
  const std::vector<int>& active = solution.active_set;
  const Eigen::Index na = static_cast<Eigen::Index>(active.size());

  ThetaJacobian jac;
  jac.complementarity_margin = std::numeric_limits<double>::infinity();
  for (int j : active)
    jac.complementarity_margin = std::min(jac.complementarity_margin, solution.eta_hat[j]);
  jac.degenerate = na > 0 && jac.complementarity_margin < kComplementarityTol;

  jac.J_theta.setZero(np, ncoord);
  jac.J_eta_bar.setZero(na, ncoord);
  if (na == np) return jac;  // all constraints active: theta pinned at zero

  const Eigen::LLT<Eigen::MatrixXd> llt(instance.C);
  throw_if(llt.info() != Eigen::Success, "implicit_jacobian: C not positive definite");

  // W = C^-1 Ibar', and the active-active Schur block (C^-1)_SS, factored once
  Eigen::MatrixXd W;
  Eigen::LDLT<Eigen::MatrixXd> schur;
  if (na > 0) {
    Eigen::MatrixXd It = Eigen::MatrixXd::Zero(np, na);
    for (Eigen::Index a = 0; a < na; ++a) It(active[a], a) = 1.0;
    W = llt.solve(It);
    Eigen::MatrixXd S(na, na);
    for (Eigen::Index a = 0; a < na; ++a)
      for (Eigen::Index b = 0; b < na; ++b) S(a, b) = W(active[a], b);
    schur.compute(S);
  }

  for (int k = 0; k < ncoord; ++k) {
    const Eigen::VectorXd b = sens.dC_ds[k] * solution.theta_hat + sens.dd_ds[k];
    const Eigen::VectorXd cinv_b = llt.solve(b);
    if (na == 0) {
      jac.J_theta.col(k) = -cinv_b;
      continue;
    }
    Eigen::VectorXd rhs(na);
    for (Eigen::Index a = 0; a < na; ++a) rhs[a] = cinv_b[active[a]];
    const Eigen::VectorXd deta = schur.solve(rhs);
    jac.J_eta_bar.col(k) = deta;
    jac.J_theta.col(k) = -cinv_b + W * deta;
  }
  return jac;
}

OuterGradient outer_gradient(const std::vector<SampleTriple>& batch,
                             const SensorLayout& layout, const Scenario& scenario,
                             const InnerConfig& inner_config,
                             std::vector<QpSolution>* warm_starts) {
  throw_if(batch.empty(), "outer_gradient: empty batch");
  const int nb = static_cast<int>(batch.size());
  const int ncoord = 2 * layout.size();
  if (warm_starts && warm_starts->empty()) warm_starts->resize(nb);

  std::vector<Eigen::VectorXd> terms(nb);
  std::vector<int> degenerate(nb, 0), diverged(nb, 0);
  std::vector<double> kkts(nb, 0.0);

#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < nb; ++i) {
    const SampleTriple& t = batch[i];
    const QpInstance inst = assemble_qp(scenario, t.beta, layout, t.phi);
    const QpSolution* warm =
        warm_starts && (*warm_starts)[i].theta_hat.size() > 0 ? &(*warm_starts)[i] : nullptr;
    const QpSolution sol = solve_pd(inst, inner_config, warm);
    if (warm_starts) (*warm_starts)[i] = sol;
    kkts[i] = sol.kkt_residual;
    if (sol.status == SolveStatus::diverged) {
      diverged[i] = 1;
      terms[i] = Eigen::VectorXd::Zero(ncoord);
      continue;
    }
    const QpSensitivities sens =
        qp_sensitivities(scenario, t.beta, layout, t.phi, sol.theta_hat);
    const ThetaJacobian jac = implicit_jacobian(inst, sens, sol);
    if (jac.degenerate) degenerate[i] = 1;
    terms[i] = jac.J_theta.transpose() * (sol.theta_hat - t.theta);
  }

  OuterGradient out;
  out.grad = Eigen::VectorXd::Zero(ncoord);
  for (int i = 0; i < nb; ++i) {
    out.grad += terms[i];
    out.degenerate_jacobians += degenerate[i];
    out.diverged_solves += diverged[i];
    out.max_kkt_residual = std::max(out.max_kkt_residual, kkts[i]);
  }
  out.grad *= 2.0 / static_cast<double>(nb);
  return out;
}

}  // namespace plume
