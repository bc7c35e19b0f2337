#include "plume/kernel.hpp"

#include <cmath>

namespace plume {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

struct KernelParts {
  bool clamped = false;
  double r_par = 0.0;   // signed along-wind distance, positive downwind
  Vec2 r_perp{0, 0};    // crosswind displacement vector
  double exponent = 0.0;
  double value = 0.0;
};

void check_inputs(const SourceSpec& source, const Vec2& sensor,
                  const WindVector& wind, double K) {
  throw_if(!(wind.beta.allFinite() && wind.beta.norm() > 0.0),
           "plume_kernel: wind vector must be finite and nonzero");
  throw_if(!(sensor.allFinite() && source.location.allFinite() &&
             std::isfinite(source.stack_height) && std::isfinite(K) && K > 0.0),
           "plume_kernel: non-finite input");
}

KernelParts kernel_parts(const SourceSpec& source, const Vec2& sensor,
                         const WindVector& wind, double K, bool wind_speed_factor) {
  KernelParts p;
  const Vec2 w = wind.direction();
  const double u = wind_speed_factor ? wind.speed() : 1.0;
  const Vec2 r = sensor - source.location;
  p.r_par = w.dot(r);
  if (p.r_par <= kUpwindClamp) {
    p.clamped = true;
    return p;
  }
  p.r_perp = r - p.r_par * w;
  const double H = source.stack_height;
  p.exponent = -u * (p.r_perp.squaredNorm() + H * H) / (4.0 * K * p.r_par);
  p.value = std::exp(p.exponent) / (kTwoPi * K * p.r_par);
  return p;
}

/// d/ds_c of the exponent -u(|r_perp|^2 + H^2) / (4K r_par), appendix
/// circled-term form: the crosswind factors are the components of r_perp
/// contracted with the projector rows.
Vec2 exponent_gradient(const KernelParts& p, const Vec2& w, double u, double H,
                       double K) {
  const double w1 = w.x(), w2 = w.y();
  const double p1 = p.r_perp.x(), p2 = p.r_perp.y();
  const double denom = 4.0 * K * p.r_par;
  const double num = u * (p.r_perp.squaredNorm() + H * H);
  Vec2 g;
  g.x() = (-u * (2.0 * p1 * (1.0 - w1 * w1) + 2.0 * p2 * (-w1 * w2)) * denom +
           num * 4.0 * K * w1) /
          (denom * denom);
  g.y() = (-u * (2.0 * p1 * (-w1 * w2) + 2.0 * p2 * (1.0 - w2 * w2)) * denom +
           num * 4.0 * K * w2) /
          (denom * denom);
  return g;
}

}  // namespace

double plume_kernel(const SourceSpec& source, const Vec2& sensor,
                    const WindVector& wind, double diffusivity_K,
                    bool wind_speed_factor) {
  check_inputs(source, sensor, wind, diffusivity_K);
  return kernel_parts(source, sensor, wind, diffusivity_K, wind_speed_factor).value;
}

Vec2 kernel_gradients(const SourceSpec& source, const Vec2& sensor,
                      const WindVector& wind, double diffusivity_K,
                      bool wind_speed_factor) {
  check_inputs(source, sensor, wind, diffusivity_K);
  const KernelParts p =
      kernel_parts(source, sensor, wind, diffusivity_K, wind_speed_factor);
  if (p.clamped) return Vec2::Zero();
  const Vec2 w = wind.direction();
  const double u = wind_speed_factor ? wind.speed() : 1.0;
  const Vec2 de = exponent_gradient(p, w, u, source.stack_height, diffusivity_K);
  // prefactor derivative: d/ds of 1/(2 pi K r_par) pulls down -w / r_par
  return p.value * (de - w / p.r_par);
}

Vec2 product_kernel_gradients(const SourceSpec& source_m, const SourceSpec& source_n,
                              const Vec2& sensor, const WindVector& wind,
                              double diffusivity_K, bool wind_speed_factor) {
  check_inputs(source_m, sensor, wind, diffusivity_K);
  check_inputs(source_n, sensor, wind, diffusivity_K);
  const KernelParts pm =
      kernel_parts(source_m, sensor, wind, diffusivity_K, wind_speed_factor);
  const KernelParts pn =
      kernel_parts(source_n, sensor, wind, diffusivity_K, wind_speed_factor);
  if (pm.clamped || pn.clamped) return Vec2::Zero();
  const Vec2 w = wind.direction();
  const double u = wind_speed_factor ? wind.speed() : 1.0;
  const Vec2 dem =
      exponent_gradient(pm, w, u, source_m.stack_height, diffusivity_K);
  const Vec2 den =
      exponent_gradient(pn, w, u, source_n.stack_height, diffusivity_K);
  const double prod = pm.value * pn.value;
  // prefactor of the product is 1/(4 pi^2 K^2 r_par^m r_par^n); its log-
  // derivative is -w (1/r_par^m + 1/r_par^n)
  return prod * (dem + den - w * (1.0 / pm.r_par + 1.0 / pn.r_par));
}

Eigen::MatrixXd forward_matrix(const Scenario& scenario, const WindVector& wind,
                               const SensorLayout& layout) {
  const int n = layout.size();
  const int np = scenario.num_sources();
  Eigen::MatrixXd F(n, np);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < np; ++j)
      F(i, j) = plume_kernel(scenario.sources[j], layout.positions[i], wind,
                             scenario.diffusivity_K, scenario.kernel_wind_speed_factor);
  return F;
}

Eigen::VectorXd synthesize_observations(const Scenario& scenario, const WindVector& wind,
                                        const SensorLayout& layout,
                                        const Eigen::VectorXd& theta, RngStream stream) {
  throw_if(theta.size() != scenario.num_sources(),
           "synthesize_observations: theta size mismatch");
  throw_if((theta.array() < 0.0).any(),
           "synthesize_observations: negative emission rate");
  Eigen::VectorXd phi = forward_matrix(scenario, wind, layout) * theta;
  if (scenario.noise_sigma > 0.0) {
    StreamRng rng(stream);
    for (Eigen::Index i = 0; i < phi.size(); ++i)
      phi[i] += scenario.noise_sigma * rng.next_normal();
  }
  return phi;
}

}  // namespace plume
