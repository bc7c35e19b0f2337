#include "plume/outer.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <cmath>
#include <limits>

namespace plume {

namespace {

// stream purpose tags local to the outer drivers
constexpr std::uint64_t kPurposeBatch = 10;
constexpr std::uint64_t kPurposeEval = 11;
constexpr std::uint64_t kPurposeGap = 12;
constexpr std::uint64_t kPurposeSelect = 13;

void apply_coordinate_mask(Eigen::VectorXd& grad, const std::vector<int>& free_coords) {
  if (free_coords.empty()) return;
  Eigen::VectorXd masked = Eigen::VectorXd::Zero(grad.size());
  for (int k : free_coords) masked[k] = grad[k];
  grad = masked;
}

double stepsize(const OuterConfig& config, int m) {
  return config.decaying_rho ? config.rho0 / static_cast<double>(m + 1) : config.rho0;
}

struct SingleRunResult {
  std::vector<SensorLayout> iterates;  // length M + 1
  std::vector<double> grad_norms;
  SensorLayout final_layout;
  double psi_value = 0.0;
  RunDiagnostics diagnostics;
  std::vector<std::uint64_t> batch_stream_ids;
  std::vector<TracePoint> trace;
};

/// One bilevel descent. rSAA passes `fixed_batch` (reused for all M outer
/// iterations); SBA passes nullptr and resamples from `batch_base` every
/// iteration.
SingleRunResult run_single(const Scenario& scenario, const WindModel& wind_model,
                           const OuterConfig& config, const SensorLayout& init,
                           std::vector<SampleTriple>* fixed_batch, RngStream batch_base,
                           RngStream eval_base, bool record_trace) {
  SingleRunResult res;
  SensorLayout layout = init;
  res.iterates.push_back(layout);
  std::vector<QpSolution> warm;
  std::vector<SampleTriple> batch;
  if (fixed_batch) batch = *fixed_batch;

  for (int m = 0; m < config.outer_iters; ++m) {
    if (!fixed_batch) {
      const RngStream bs = substream(batch_base, 0, m, 0, kPurposeBatch);
      res.batch_stream_ids.push_back(bs.stream_id);
      batch = draw_batch(scenario, wind_model, layout, config.batch_size, bs);
    }
    std::vector<QpSolution>* warm_ptr = config.warm_start ? &warm : nullptr;
    if (config.warm_start && warm.empty()) warm.resize(batch.size());
    const OuterGradient og =
        outer_gradient(batch, layout, scenario, config.inner, warm_ptr);
    res.diagnostics.degenerate_jacobians += og.degenerate_jacobians;
    res.diagnostics.diverged_solves += og.diverged_solves;
    if (og.diverged_solves * 10 > static_cast<int>(batch.size())) {
      res.diagnostics.aborted = true;
      break;
    }
    Eigen::VectorXd grad = og.grad;
    apply_coordinate_mask(grad, config.free_coords);
    res.grad_norms.push_back(grad.norm());

    const SensorLayout next = projected_step(layout, grad, stepsize(config, m),
                                             scenario.domain_lo, scenario.domain_hi);
    const Eigen::VectorXd raw = layout.flat() - stepsize(config, m) * grad;
    if ((raw - next.flat()).cwiseAbs().maxCoeff() > 0.0) ++res.diagnostics.clamped_steps;
    layout = next;
    res.iterates.push_back(layout);

    if (record_trace && config.trace_every > 0 &&
        ((m + 1) % config.trace_every == 0 || m + 1 == config.outer_iters)) {
      const ObjectiveValue v =
          evaluate_objective(scenario, wind_model, layout, config.eval_N,
                             substream(eval_base, 0, m, 0, kPurposeEval), config.inner);
      res.trace.push_back({m + 1, v.psi_hat, v.std_err, config.eval_N});
    }
  }

  if (config.random_iterate && res.iterates.size() > 1) {
    const int M = static_cast<int>(res.iterates.size()) - 1;
    double A = 0.0;
    for (int m = 0; m < M; ++m) A += 1.0 / (m + 1.0);
    StreamRng rng(substream(batch_base, 0, 0, 0, kPurposeSelect));
    double u = rng.next_double() * A;
    int pick = M - 1;
    for (int m = 0; m < M; ++m) {
      u -= 1.0 / (m + 1.0);
      if (u <= 0.0) { pick = m; break; }
    }
    res.final_layout = res.iterates[pick + 1];
  } else {
    res.final_layout = layout;
  }
  if (fixed_batch)
    res.psi_value = objective_on_batch(scenario, res.final_layout, batch, config.inner);
  return res;
}

/// O(n^3) Hungarian assignment on a square cost matrix; returns, for each
/// row, the assigned column.
std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
        if (minv[j] < delta) { delta = minv[j]; j1 = j; }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
        else minv[j] -= delta;
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

SensorLayout combine_runs(const std::vector<PerRunSolution>& runs, bool align) {
  std::vector<const SensorLayout*> ok;
  for (const auto& r : runs)
    if (!r.failed) ok.push_back(&r.layout);
  const int n = ok.front()->size();
  SensorLayout ref = *ok.front();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2 * n);
  for (const SensorLayout* lp : ok) {
    SensorLayout l = *lp;
    if (align && n > 1) {
      Eigen::MatrixXd cost(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          cost(a, b) = (ref.positions[a] - l.positions[b]).squaredNorm();
      const std::vector<int> match = hungarian(cost);
      SensorLayout permuted;
      permuted.positions.resize(n);
      for (int a = 0; a < n; ++a) permuted.positions[a] = l.positions[match[a]];
      l = permuted;
    }
    sum += l.flat();
  }
  return SensorLayout::from_flat(sum / static_cast<double>(ok.size()));
}

}  // namespace

SensorLayout projected_step(const SensorLayout& layout, const Eigen::VectorXd& gradient,
                            double rho, const Vec2& box_lo, const Vec2& box_hi) {
  throw_if(!gradient.allFinite(), "projected_step: non-finite gradient");
  throw_if(gradient.size() != 2 * layout.size(), "projected_step: gradient size mismatch");
  SensorLayout out = layout;
  for (int i = 0; i < layout.size(); ++i) {
    Vec2 p = layout.positions[i] - rho * Vec2(gradient[2 * i], gradient[2 * i + 1]);
    out.positions[i] = p.cwiseMax(box_lo).cwiseMin(box_hi);
  }
  return out;
}

RunReport run_sba(const Scenario& scenario, const WindModel& wind_model,
                  const OuterConfig& config, const SensorLayout& init,
                  std::uint64_t seed) {
  scenario.validate();
  wind_model.validate();
  validate_layout(scenario, init);
  const auto t0 = std::chrono::steady_clock::now();
  const RngStream base{seed, 0};

  SingleRunResult res = run_single(scenario, wind_model, config, init, nullptr,
                                   substream(base, 1), substream(base, 2), true);

  RunReport report;
  report.iterates = std::move(res.iterates);
  report.gradient_norm_trace = std::move(res.grad_norms);
  report.objective_trace = std::move(res.trace);
  report.combined = res.final_layout;
  report.diagnostics = res.diagnostics;
  report.batch_stream_ids = std::move(res.batch_stream_ids);
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

RunReport run_rsaa(const Scenario& scenario, const WindModel& wind_model,
                   const OuterConfig& config, const std::vector<SensorLayout>& inits,
                   std::uint64_t seed) {
  scenario.validate();
  wind_model.validate();
  throw_if(inits.empty(), "run_rsaa: needs at least one initial layout");
  const auto t0 = std::chrono::steady_clock::now();
  const int K = config.runs;
  const RngStream base{seed, 0};

  RunReport report;
  report.per_run.resize(K);
  std::vector<SingleRunResult> results(K);

#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < K; ++k) {
    const SensorLayout& init = inits[k % inits.size()];
    const RngStream bs = substream(base, static_cast<std::uint64_t>(k), 0, 0, kPurposeBatch);
    std::vector<SampleTriple> batch =
        draw_batch(scenario, wind_model, init, config.batch_size, bs);
    results[k] = run_single(scenario, wind_model, config, init, &batch,
                            substream(base, static_cast<std::uint64_t>(k), 1),
                            substream(base, static_cast<std::uint64_t>(k), 2), k == 0);
    results[k].batch_stream_ids.push_back(bs.stream_id);
  }

  int failed = 0;
  for (int k = 0; k < K; ++k) {
    report.per_run[k].layout = results[k].final_layout;
    report.per_run[k].psi_value = results[k].psi_value;
    report.per_run[k].failed = results[k].diagnostics.aborted;
    if (report.per_run[k].failed) ++failed;
    report.diagnostics.clamped_steps += results[k].diagnostics.clamped_steps;
    report.diagnostics.degenerate_jacobians += results[k].diagnostics.degenerate_jacobians;
    report.diagnostics.diverged_solves += results[k].diagnostics.diverged_solves;
    for (std::uint64_t id : results[k].batch_stream_ids)
      report.batch_stream_ids.push_back(id);
  }
  throw_if(failed == K, "run_rsaa: every run aborted");
  report.iterates = std::move(results[0].iterates);
  report.gradient_norm_trace = std::move(results[0].grad_norms);
  report.objective_trace = std::move(results[0].trace);
  report.combined = combine_runs(report.per_run, config.align_runs);

  if (K >= 2 && failed == 0) {
    std::vector<double> values;
    values.reserve(K);
    for (const auto& r : report.per_run) values.push_back(r.psi_value);
    report.gap = gap_bound(values, report.combined, scenario, wind_model, config.eval_N,
                           config.alpha, config.inner, seed);
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

GapCertificate gap_bound(const std::vector<double>& per_run_values,
                         const SensorLayout& combined_layout, const Scenario& scenario,
                         const WindModel& wind_model, int eval_N, double alpha,
                         const InnerConfig& inner, std::uint64_t seed) {
  const int K = static_cast<int>(per_run_values.size());
  throw_if(K < 2, "gap_bound: needs K >= 2 runs");

  const ObjectiveValue upper_eval =
      evaluate_objective(scenario, wind_model, combined_layout, eval_N,
                         substream(RngStream{seed, 0}, 0, 0, 0, kPurposeGap), inner);

  double mean = 0.0;
  for (double v : per_run_values) mean += v;
  mean /= K;
  double ss = 0.0;
  for (double v : per_run_values) ss += (v - mean) * (v - mean);
  const double sigma_k = std::sqrt(ss / (static_cast<double>(K) * (K - 1)));

  GapCertificate cert;
  cert.z_alpha = boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha);
  cert.t_alpha =
      boost::math::quantile(boost::math::students_t_distribution<double>(K - 1), 1.0 - alpha);
  cert.psi_N = upper_eval.psi_hat;
  cert.sigma_N = upper_eval.std_err;
  cert.psi_bar = mean;
  cert.sigma_K = sigma_k;
  cert.upper = cert.psi_N + cert.z_alpha * cert.sigma_N;
  cert.lower = cert.psi_bar - cert.t_alpha * cert.sigma_K;
  cert.delta = cert.upper - cert.lower;
  cert.K_used = K;
  return cert;
}

GridOracleResult grid_oracle(const Scenario& scenario, const WindModel& wind_model,
                             const SensorLayout& layout_template,
                             const std::vector<int>& free_coords, int points_per_axis,
                             int eval_N, const InnerConfig& inner, std::uint64_t seed) {
  scenario.validate();
  wind_model.validate();
  throw_if(free_coords.empty() || free_coords.size() > 2,
           "grid_oracle: supports 1 or 2 free coordinates");
  throw_if(points_per_axis < 2, "grid_oracle: needs at least 2 grid points per axis");

  const int nfree = static_cast<int>(free_coords.size());
  const int total = nfree == 1 ? points_per_axis : points_per_axis * points_per_axis;
  const RngStream common{seed, 0};  // shared across grid points on purpose

  auto coord_value = [&](int coord, int idx) {
    const int axis = coord % 2;
    const double lo = scenario.domain_lo[axis];
    const double hi = scenario.domain_hi[axis];
    return lo + (hi - lo) * static_cast<double>(idx) / (points_per_axis - 1);
  };

  std::vector<GridPoint> curve(total);
#pragma omp parallel for schedule(dynamic)
  for (int g = 0; g < total; ++g) {
    Eigen::VectorXd flat = layout_template.flat();
    Eigen::VectorXd coords(nfree);
    if (nfree == 1) {
      coords[0] = coord_value(free_coords[0], g);
      flat[free_coords[0]] = coords[0];
    } else {
      coords[0] = coord_value(free_coords[0], g / points_per_axis);
      coords[1] = coord_value(free_coords[1], g % points_per_axis);
      flat[free_coords[0]] = coords[0];
      flat[free_coords[1]] = coords[1];
    }
    const SensorLayout layout = SensorLayout::from_flat(flat);
    const ObjectiveValue v =
        evaluate_objective_serial(scenario, wind_model, layout, eval_N, common, inner);
    curve[g] = GridPoint{coords, v.psi_hat, v.std_err};
  }

  int best = 0;
  for (int g = 1; g < total; ++g)
    if (curve[g].psi_hat < curve[best].psi_hat) best = g;  // ties keep the first

  GridOracleResult res;
  res.curve = std::move(curve);
  res.best = res.curve[best];
  Eigen::VectorXd flat = layout_template.flat();
  for (int f = 0; f < nfree; ++f) flat[free_coords[f]] = res.best.coords[f];
  res.best_layout = SensorLayout::from_flat(flat);
  return res;
}

}  // namespace plume
