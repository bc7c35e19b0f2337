#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plume/outer.hpp"
#include "plume/scenario.hpp"
#include "plume/validation.hpp"

namespace plume {

/// 17-significant-digit decimal rendering; round-trips doubles exactly.
std::string format_g17(double v);

/// Metadata comment stamped as the second line of every CSV.
std::string csv_metadata(std::uint64_t seed, std::uint64_t scenario_hash);

void write_layout_csv(const std::string& path, const SensorLayout& layout,
                      const std::string& metadata);
SensorLayout read_layout_csv(const std::string& path);

/// Emits run_report.csv, iterates.csv, objective_trace.csv, layout_final.csv,
/// trajectory.svg and timing.txt under `dir`. Everything except timing.txt is
/// deterministic for a fixed seed.
void write_run_report(const std::string& dir, const RunReport& report,
                      const Scenario& scenario, std::uint64_t seed,
                      std::uint64_t scenario_hash);

void write_grid_curve(const std::string& dir, const GridOracleResult& result,
                      std::uint64_t seed, std::uint64_t scenario_hash);

void write_validation_report(const std::string& dir, const ValidationReport& report,
                             std::uint64_t seed, std::uint64_t scenario_hash);

/// Re-render trajectory.svg from previously written CSVs in `dir`.
void render_svg_from_csv(const std::string& dir, const Scenario& scenario);

}  // namespace plume
