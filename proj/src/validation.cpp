#include "plume/validation.hpp"

#include <algorithm>
#include <cmath>

#include "plume/kernel.hpp"
#include "plume/sampling.hpp"

namespace plume {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

struct TrialOutcome {
  Eigen::VectorXd theta_true;
  Eigen::VectorXd theta_hat;
};

std::vector<TrialOutcome> run_trials(const Scenario& scenario, const WindModel& wind_model,
                                     const SensorLayout& layout, int trials,
                                     const InnerConfig& inner, RngStream base) {
  std::vector<TrialOutcome> out(trials);
#pragma omp parallel for schedule(dynamic, 8)
  for (int t = 0; t < trials; ++t) {
    TrialOutcome& o = out[t];
    o.theta_true = draw_emissions(scenario, sample_stream(base, t, DrawPurpose::emissions));
    const WindVector wind = draw_wind(wind_model, sample_stream(base, t, DrawPurpose::wind));
    const Eigen::VectorXd phi = synthesize_observations(
        scenario, wind, layout, o.theta_true, sample_stream(base, t, DrawPurpose::noise));
    o.theta_hat = solve_pd(assemble_qp(scenario, wind, layout, phi), inner).theta_hat;
  }
  return out;
}

double mape_of(const std::vector<TrialOutcome>& outcomes) {
  double sum = 0.0;
  Eigen::Index np = outcomes.front().theta_true.size();
  for (const auto& o : outcomes)
    for (Eigen::Index j = 0; j < np; ++j)
      sum += std::abs(o.theta_hat[j] - o.theta_true[j]) /
             std::max(o.theta_true[j], kMapeFloor);
  return 100.0 * sum / (static_cast<double>(outcomes.size()) * static_cast<double>(np));
}

}  // namespace

ValidationReport validate_designs(const Scenario& scenario, const WindModel& wind_model,
                                  const std::vector<NamedLayout>& designs,
                                  const ValidationOptions& options, std::uint64_t seed) {
  throw_if(options.trials < 100, "validate_designs: trials must be >= 100");
  throw_if(designs.empty(), "validate_designs: needs at least one design");
  const RngStream base{seed, 0};

  ValidationReport report;
  report.trials = options.trials;
  for (const NamedLayout& design : designs) {
    validate_layout(scenario, design.layout);
    DesignReport dr;
    dr.name = design.name;

    const auto outcomes = run_trials(scenario, wind_model, design.layout, options.trials,
                                     options.inner, substream(base, 0));
    dr.mape_percent = mape_of(outcomes);

    const Eigen::Index np = scenario.num_sources();
    dr.per_source.resize(np);
    for (Eigen::Index j = 0; j < np; ++j) {
      std::vector<double> est, tru;
      est.reserve(outcomes.size());
      tru.reserve(outcomes.size());
      for (const auto& o : outcomes) {
        est.push_back(o.theta_hat[j]);
        tru.push_back(o.theta_true[j]);
      }
      std::sort(est.begin(), est.end());
      std::sort(tru.begin(), tru.end());
      dr.per_source[j] = {quantile_sorted(est, 0.25), quantile_sorted(est, 0.5),
                          quantile_sorted(est, 0.75), quantile_sorted(tru, 0.25),
                          quantile_sorted(tru, 0.5),  quantile_sorted(tru, 0.75)};
    }

    std::uint64_t cell = 0;
    for (double nm : options.noise_multipliers) {
      for (double pm : options.prior_multipliers) {
        Scenario sweep = scenario;
        sweep.noise_sigma = scenario.noise_sigma * nm;
        sweep.prior_sigma = scenario.prior_sigma * pm;
        const auto sw = run_trials(sweep, wind_model, design.layout, options.sweep_trials,
                                   options.inner, substream(base, 1, cell++));
        double err = 0.0;
        for (const auto& o : sw) err += (o.theta_hat - o.theta_true).norm();
        dr.noise_sweep.push_back(
            {sweep.noise_sigma, sweep.prior_sigma, err / sw.size()});
      }
    }
    report.designs.push_back(std::move(dr));
  }
  return report;
}

}  // namespace plume
