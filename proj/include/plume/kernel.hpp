#pragma once

#include <Eigen/Core>

#include "plume/rng.hpp"
#include "plume/scenario.hpp"

namespace plume {

/// Sensors at most this far downwind of a source (along the wind axis) see
/// nothing: the kernel and its gradients are clamped to exactly zero there.
inline constexpr double kUpwindClamp = 1e-6;  // meters

/// Steady-state Gaussian plume concentration at `sensor` per unit emission
/// of `source`. Zero for sensors upwind of the source.
double plume_kernel(const SourceSpec& source, const Vec2& sensor,
                    const WindVector& wind, double diffusivity_K,
                    bool wind_speed_factor = true);

/// Analytic gradient of plume_kernel with respect to the sensor coordinates.
/// Exactly (0, 0) in the clamped upwind region.
Vec2 kernel_gradients(const SourceSpec& source, const Vec2& sensor,
                      const WindVector& wind, double diffusivity_K,
                      bool wind_speed_factor = true);

/// Analytic gradient of the product A_m * A_n with respect to the sensor
/// coordinates. Zero whenever either factor is clamped.
Vec2 product_kernel_gradients(const SourceSpec& source_m, const SourceSpec& source_n,
                              const Vec2& sensor, const WindVector& wind,
                              double diffusivity_K, bool wind_speed_factor = true);

/// The linear forward map: entry (i, j) is the kernel of source j at sensor i.
Eigen::MatrixXd forward_matrix(const Scenario& scenario, const WindVector& wind,
                               const SensorLayout& layout);

/// Phi = F theta + eps with eps ~ N(0, noise_sigma^2 I) drawn from `stream`.
Eigen::VectorXd synthesize_observations(const Scenario& scenario, const WindVector& wind,
                                        const SensorLayout& layout,
                                        const Eigen::VectorXd& theta, RngStream stream);

}  // namespace plume
