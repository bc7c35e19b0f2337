#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "plume/scenario.hpp"

namespace plume {

/// Thrown on malformed scenario/config documents; the CLI maps it to exit 2.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parse a scenario document (JSON, strict: unknown keys rejected).
std::pair<Scenario, WindModel> parse_scenario(const std::string& path);
std::pair<Scenario, WindModel> parse_scenario_text(const std::string& text);

std::string serialize_scenario(const Scenario& scenario, const WindModel& wind);

/// FNV-1a over the canonical serialization; stamped into CSV metadata lines.
std::uint64_t scenario_hash(const Scenario& scenario, const WindModel& wind);

}  // namespace plume
