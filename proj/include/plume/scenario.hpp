#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace plume {

using Vec2 = Eigen::Vector2d;

/// A single point emitter: ground location plus stack height.
struct SourceSpec {
  Vec2 location{0.0, 0.0};
  double stack_height = 0.0;  // H_j, meters
};

/// Horizontal wind vector. Zero wind is invalid: the plume kernel divides by
/// the along-wind distance.
struct WindVector {
  Vec2 beta{0.0, 0.0};  // m/s

  double speed() const { return beta.norm(); }
  Vec2 direction() const { return beta / beta.norm(); }
};

/// Site description: sources, dispersion constants, priors, noise level and
/// the feasible box for sensors.
struct Scenario {
  std::vector<SourceSpec> sources;
  double diffusivity_K = 1.0;  // eddy diffusivity, m^2/s
  double noise_sigma = 0.0;    // observation-noise std
  Vec2 domain_lo{0.0, 0.0};
  Vec2 domain_hi{1.0, 1.0};
  Eigen::VectorXd prior_mean;    // mu_pr, one entry per source
  double prior_sigma = 1.0;      // sigma_Pr (Gamma_pr = sigma_Pr^2 I)
  double elastic_l2 = 1e-4;      // lambda_1, ridge weight (must be > 0)
  double elastic_l1 = 0.0;       // lambda_2, lasso weight
  bool kernel_wind_speed_factor = true;  // include u = |beta| in the exponent

  int num_sources() const { return static_cast<int>(sources.size()); }

  void validate() const;
};

/// The decision variable: n sensor positions inside the scenario box.
struct SensorLayout {
  std::vector<Vec2> positions;

  int size() const { return static_cast<int>(positions.size()); }

  /// Flatten to (x0, y0, x1, y1, ...) for gradient arithmetic.
  Eigen::VectorXd flat() const;
  static SensorLayout from_flat(const Eigen::VectorXd& v);
};

/// Uniform speed band and direction arc. Direction angle is measured
/// clockwise from north; a north wind (angle 0) gives beta = (0, -speed).
struct WindModel {
  double speed_lo = 1.0;
  double speed_hi = 2.0;
  double dir_lo = 0.0;  // radians
  double dir_hi = 0.0;

  void validate() const;
};

inline void throw_if(bool cond, const std::string& msg) {
  if (cond) throw std::invalid_argument(msg);
}

void validate_layout(const Scenario& sc, const SensorLayout& layout);

}  // namespace plume
