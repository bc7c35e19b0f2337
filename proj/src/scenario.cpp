#include "plume/scenario.hpp"

namespace plume {

void Scenario::validate() const {
  throw_if(sources.empty(), "scenario: needs at least one source");
  throw_if(!(domain_lo.x() < domain_hi.x() && domain_lo.y() < domain_hi.y()),
           "scenario: domain_lo must be below domain_hi componentwise");
  throw_if(!(diffusivity_K > 0.0), "scenario: diffusivity must be positive");
  throw_if(noise_sigma < 0.0, "scenario: noise_sigma must be non-negative");
  throw_if(!(elastic_l2 > 0.0), "scenario: elastic l2 weight must be positive");
  throw_if(elastic_l1 < 0.0, "scenario: elastic l1 weight must be non-negative");
  throw_if(prior_mean.size() != num_sources(),
           "scenario: prior_mean size must match source count");
  throw_if(prior_sigma < 0.0, "scenario: prior_sigma must be non-negative");
  for (const auto& src : sources) {
    throw_if(src.stack_height < 0.0, "scenario: stack height must be non-negative");
    throw_if((src.location.array() < domain_lo.array()).any() ||
                 (src.location.array() > domain_hi.array()).any(),
             "scenario: source outside the domain box");
  }
}

Eigen::VectorXd SensorLayout::flat() const {
  Eigen::VectorXd v(2 * positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    v[2 * i] = positions[i].x();
    v[2 * i + 1] = positions[i].y();
  }
  return v;
}

SensorLayout SensorLayout::from_flat(const Eigen::VectorXd& v) {
  SensorLayout layout;
  layout.positions.resize(v.size() / 2);
  for (std::size_t i = 0; i < layout.positions.size(); ++i)
    layout.positions[i] = Vec2(v[2 * i], v[2 * i + 1]);
  return layout;
}

void WindModel::validate() const {
  throw_if(!(0.0 < speed_lo && speed_lo <= speed_hi),
           "wind model: need 0 < speed_lo <= speed_hi");
  throw_if(dir_lo > dir_hi, "wind model: need dir_lo <= dir_hi");
}

void validate_layout(const Scenario& sc, const SensorLayout& layout) {
  throw_if(layout.size() < 1, "layout: needs at least one sensor");
  for (const auto& p : layout.positions)
    throw_if((p.array() < sc.domain_lo.array()).any() ||
                 (p.array() > sc.domain_hi.array()).any(),
             "layout: sensor outside the domain box");
}

}  // namespace plume
