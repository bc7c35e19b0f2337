#include "plume/sampling.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace plume {

WindVector draw_wind(const WindModel& model, RngStream stream) {
  model.validate();
  StreamRng rng(stream);
  const double speed = rng.uniform(model.speed_lo, model.speed_hi);
  const double dir = rng.uniform(model.dir_lo, model.dir_hi);
  // direction measured clockwise from north; a north wind blows toward -y
  return WindVector{Vec2(speed * std::sin(dir), -speed * std::cos(dir))};
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double truncated_normal_at_zero(double mu, double sigma, StreamRng& rng) {
  const double accept_prob = 1.0 - normal_cdf(-mu / sigma);
  if (accept_prob >= 0.1) {
    for (;;) {
      const double x = mu + sigma * rng.next_normal();
      if (x >= 0.0) return x;
    }
  }
  // deep truncation: invert the conditional CDF instead of rejecting
  static const boost::math::normal_distribution<double> std_normal;
  const double lo = normal_cdf(-mu / sigma);
  const double p = lo + rng.next_double_oc() * (1.0 - lo);
  return mu + sigma * boost::math::quantile(std_normal, std::min(p, 1.0 - 1e-16));
}

}  // namespace

Eigen::VectorXd draw_emissions(const Scenario& scenario, RngStream stream) {
  const int np = scenario.num_sources();
  Eigen::VectorXd theta(np);
  if (scenario.prior_sigma == 0.0) {
    throw_if((scenario.prior_mean.array() < 0.0).any(),
             "draw_emissions: degenerate prior requires mu_pr >= 0");
    return scenario.prior_mean;
  }
  StreamRng rng(stream);
  for (int j = 0; j < np; ++j)
    theta[j] = truncated_normal_at_zero(scenario.prior_mean[j], scenario.prior_sigma, rng);
  return theta;
}

std::vector<SampleTriple> draw_batch(const Scenario& scenario, const WindModel& wind_model,
                                     const SensorLayout& layout, int count,
                                     RngStream stream_base) {
  throw_if(count < 1, "draw_batch: count must be >= 1");
  std::vector<SampleTriple> batch(count);
  for (int i = 0; i < count; ++i) {
    SampleTriple& t = batch[i];
    t.theta = draw_emissions(scenario, sample_stream(stream_base, i, DrawPurpose::emissions));
    t.beta = draw_wind(wind_model, sample_stream(stream_base, i, DrawPurpose::wind));
    t.phi = synthesize_observations(scenario, t.beta, layout, t.theta,
                                    sample_stream(stream_base, i, DrawPurpose::noise));
  }
  return batch;
}

namespace {

double recovery_error_sq(const Scenario& scenario, const SensorLayout& layout,
                         const SampleTriple& t, const InnerConfig& config,
                         SolveStatus* status) {
  const QpInstance inst = assemble_qp(scenario, t.beta, layout, t.phi);
  const QpSolution sol = solve_pd(inst, config);
  if (status) *status = sol.status;
  return (sol.theta_hat - t.theta).squaredNorm();
}

ObjectiveValue reduce_objective(const Eigen::VectorXd& per_sample) {
  ObjectiveValue out;
  out.per_sample = per_sample;
  const Eigen::Index n = per_sample.size();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += per_sample[i];
  out.psi_hat = sum / static_cast<double>(n);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dev = per_sample[i] - out.psi_hat;
    ss += dev * dev;
  }
  out.std_err = std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1)));
  return out;
}

template <bool Parallel>
ObjectiveValue evaluate_objective_impl(const Scenario& scenario,
                                       const WindModel& wind_model,
                                       const SensorLayout& layout, int count,
                                       RngStream stream_base, const InnerConfig& config) {
  throw_if(count < 2, "evaluate_objective: count must be >= 2");
  validate_layout(scenario, layout);
  Eigen::VectorXd per_sample(count);
  std::vector<SolveStatus> statuses(count, SolveStatus::converged);
#pragma omp parallel for schedule(dynamic, 16) if (Parallel)
  for (int i = 0; i < count; ++i) {
    SampleTriple t;
    t.theta = draw_emissions(scenario, sample_stream(stream_base, i, DrawPurpose::emissions));
    t.beta = draw_wind(wind_model, sample_stream(stream_base, i, DrawPurpose::wind));
    t.phi = synthesize_observations(scenario, t.beta, layout, t.theta,
                                    sample_stream(stream_base, i, DrawPurpose::noise));
    per_sample[i] = recovery_error_sq(scenario, layout, t, config, &statuses[i]);
  }
  for (int i = 0; i < count; ++i) {
    if (statuses[i] == SolveStatus::diverged) {
      std::ostringstream msg;
      msg << "evaluate_objective: inner solver diverged at sample " << i;
      throw std::runtime_error(msg.str());
    }
  }
  return reduce_objective(per_sample);
}

}  // namespace

ObjectiveValue evaluate_objective(const Scenario& scenario, const WindModel& wind_model,
                                  const SensorLayout& layout, int count,
                                  RngStream stream_base, const InnerConfig& qp_config) {
  return evaluate_objective_impl<true>(scenario, wind_model, layout, count, stream_base,
                                       qp_config);
}

ObjectiveValue evaluate_objective_serial(const Scenario& scenario,
                                         const WindModel& wind_model,
                                         const SensorLayout& layout, int count,
                                         RngStream stream_base,
                                         const InnerConfig& qp_config) {
  return evaluate_objective_impl<false>(scenario, wind_model, layout, count, stream_base,
                                        qp_config);
}

double objective_on_batch(const Scenario& scenario, const SensorLayout& layout,
                          const std::vector<SampleTriple>& batch,
                          const InnerConfig& qp_config) {
  throw_if(batch.empty(), "objective_on_batch: empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    SolveStatus status;
    sum += recovery_error_sq(scenario, layout, batch[i], qp_config, &status);
    if (status == SolveStatus::diverged) {
      std::ostringstream msg;
      msg << "objective_on_batch: inner solver diverged at sample " << i;
      throw std::runtime_error(msg.str());
    }
  }
  return sum / static_cast<double>(batch.size());
}

}  // namespace plume
