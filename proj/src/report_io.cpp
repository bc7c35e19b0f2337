#include "plume/report_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace plume {

namespace fs = std::filesystem;

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_metadata(std::uint64_t seed, std::uint64_t scenario_hash) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "# placer 0.1.0 seed=%llu scenario=%016llx",
                static_cast<unsigned long long>(seed),
                static_cast<unsigned long long>(scenario_hash));
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: byte-identical newlines
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

struct SvgMapper {
  Vec2 lo, hi;
  double w = 640.0, h = 640.0, pad = 40.0;
  double x(double v) const { return pad + (v - lo.x()) / (hi.x() - lo.x()) * (w - 2 * pad); }
  double y(double v) const { return h - pad - (v - lo.y()) / (hi.y() - lo.y()) * (h - 2 * pad); }
};

void write_trajectory_svg(const std::string& path, const Scenario& scenario,
                          const std::vector<SensorLayout>& iterates,
                          const SensorLayout& final_layout) {
  SvgMapper map{scenario.domain_lo, scenario.domain_hi};
  std::ofstream out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << map.w << "\" height=\""
      << map.h << "\">\n";
  out << "<rect x=\"" << map.pad << "\" y=\"" << map.pad << "\" width=\""
      << map.w - 2 * map.pad << "\" height=\"" << map.h - 2 * map.pad
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (const auto& src : scenario.sources)
    out << "<circle cx=\"" << map.x(src.location.x()) << "\" cy=\""
        << map.y(src.location.y()) << "\" r=\"5\" fill=\"firebrick\"/>\n";
  if (!iterates.empty()) {
    const int n = iterates.front().size();
    for (int i = 0; i < n; ++i) {
      out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" points=\"";
      for (const auto& layout : iterates)
        out << map.x(layout.positions[i].x()) << "," << map.y(layout.positions[i].y())
            << " ";
      out << "\"/>\n";
    }
  }
  for (const auto& p : final_layout.positions)
    out << "<circle cx=\"" << map.x(p.x()) << "\" cy=\"" << map.y(p.y())
        << "\" r=\"4\" fill=\"seagreen\"/>\n";
  out << "</svg>\n";
}

}  // namespace

void write_layout_csv(const std::string& path, const SensorLayout& layout,
                      const std::string& metadata) {
  std::ofstream out = open_out(path);
  out << "sensor_index,x,y\n" << metadata << "\n";
  for (int i = 0; i < layout.size(); ++i)
    out << i << "," << format_g17(layout.positions[i].x()) << ","
        << format_g17(layout.positions[i].y()) << "\n";
}

SensorLayout read_layout_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  SensorLayout layout;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("sensor_index", 0) == 0) continue;
    std::istringstream ss(line);
    std::string idx, xs, ys;
    if (!std::getline(ss, idx, ',') || !std::getline(ss, xs, ',') || !std::getline(ss, ys))
      throw std::runtime_error("malformed layout row in '" + path + "'");
    layout.positions.emplace_back(std::stod(xs), std::stod(ys));
  }
  if (layout.positions.empty())
    throw std::runtime_error("no sensor rows in '" + path + "'");
  return layout;
}

void write_run_report(const std::string& dir, const RunReport& report,
                      const Scenario& scenario, std::uint64_t seed,
                      std::uint64_t scenario_hash) {
  fs::create_directories(dir);
  const std::string meta = csv_metadata(seed, scenario_hash);

  {
    std::ofstream out = open_out(dir + "/iterates.csv");
    out << "m,sensor_index,x,y\n" << meta << "\n";
    for (std::size_t m = 0; m < report.iterates.size(); ++m)
      for (int i = 0; i < report.iterates[m].size(); ++i)
        out << m << "," << i << ","
            << format_g17(report.iterates[m].positions[i].x()) << ","
            << format_g17(report.iterates[m].positions[i].y()) << "\n";
  }
  {
    std::ofstream out = open_out(dir + "/objective_trace.csv");
    out << "m,psi_hat,std_err,eval_N\n" << meta << "\n";
    for (const auto& t : report.objective_trace)
      out << t.m << "," << format_g17(t.psi_hat) << "," << format_g17(t.std_err) << ","
          << t.eval_N << "\n";
  }
  write_layout_csv(dir + "/layout_final.csv", report.combined, meta);
  {
    std::ofstream out = open_out(dir + "/run_report.csv");
    out << "key,value\n" << meta << "\n";
    out << "outer_iterations," << (report.iterates.empty() ? 0 : report.iterates.size() - 1)
        << "\n";
    out << "runs," << std::max<std::size_t>(report.per_run.size(), 1) << "\n";
    out << "clamped_steps," << report.diagnostics.clamped_steps << "\n";
    out << "degenerate_jacobians," << report.diagnostics.degenerate_jacobians << "\n";
    out << "diverged_solves," << report.diagnostics.diverged_solves << "\n";
    out << "aborted," << (report.diagnostics.aborted ? 1 : 0) << "\n";
    if (!report.gradient_norm_trace.empty())
      out << "final_gradient_norm," << format_g17(report.gradient_norm_trace.back())
          << "\n";
    for (std::size_t k = 0; k < report.per_run.size(); ++k)
      out << "run_" << k << "_psi," << format_g17(report.per_run[k].psi_value) << "\n";
    if (report.gap) {
      out << "gap_upper," << format_g17(report.gap->upper) << "\n";
      out << "gap_lower," << format_g17(report.gap->lower) << "\n";
      out << "gap_delta," << format_g17(report.gap->delta) << "\n";
      out << "gap_z_alpha," << format_g17(report.gap->z_alpha) << "\n";
      out << "gap_t_alpha," << format_g17(report.gap->t_alpha) << "\n";
      out << "gap_K," << report.gap->K_used << "\n";
    }
  }
  {
    // timing lives outside the CSVs: it is the one non-deterministic output
    std::ofstream out = open_out(dir + "/timing.txt");
    out << "wall_time_s " << report.wall_time_s << "\n";
  }
  write_trajectory_svg(dir + "/trajectory.svg", scenario, report.iterates, report.combined);
}

void write_grid_curve(const std::string& dir, const GridOracleResult& result,
                      std::uint64_t seed, std::uint64_t scenario_hash) {
  fs::create_directories(dir);
  std::ofstream out = open_out(dir + "/curve.csv");
  const int nfree = static_cast<int>(result.best.coords.size());
  out << (nfree == 1 ? "coordinate" : "coordinate_0,coordinate_1")
      << ",psi_hat,std_err\n"
      << csv_metadata(seed, scenario_hash) << "\n";
  for (const auto& p : result.curve) {
    for (int f = 0; f < nfree; ++f) out << format_g17(p.coords[f]) << ",";
    out << format_g17(p.psi_hat) << "," << format_g17(p.std_err) << "\n";
  }
  write_layout_csv(dir + "/layout_best.csv", result.best_layout,
                   csv_metadata(seed, scenario_hash));
}

void write_validation_report(const std::string& dir, const ValidationReport& report,
                             std::uint64_t seed, std::uint64_t scenario_hash) {
  fs::create_directories(dir);
  const std::string meta = csv_metadata(seed, scenario_hash);
  {
    std::ofstream out = open_out(dir + "/mape.csv");
    out << "design,trials,mape_percent\n" << meta << "\n";
    for (const auto& d : report.designs)
      out << d.name << "," << report.trials << "," << format_g17(d.mape_percent) << "\n";
  }
  {
    std::ofstream out = open_out(dir + "/quartiles.csv");
    out << "design,source,est_q1,est_med,est_q3,true_q1,true_med,true_q3\n"
        << meta << "\n";
    for (const auto& d : report.designs)
      for (std::size_t j = 0; j < d.per_source.size(); ++j) {
        const auto& q = d.per_source[j];
        out << d.name << "," << j << "," << format_g17(q.est_q1) << ","
            << format_g17(q.est_med) << "," << format_g17(q.est_q3) << ","
            << format_g17(q.true_q1) << "," << format_g17(q.true_med) << ","
            << format_g17(q.true_q3) << "\n";
      }
  }
  {
    std::ofstream out = open_out(dir + "/noise_sweep.csv");
    out << "design,noise_sigma,prior_sigma,mean_error\n" << meta << "\n";
    for (const auto& d : report.designs)
      for (const auto& c : d.noise_sweep)
        out << d.name << "," << format_g17(c.noise_sigma) << ","
            << format_g17(c.prior_sigma) << "," << format_g17(c.mean_error) << "\n";
  }
}

void render_svg_from_csv(const std::string& dir, const Scenario& scenario) {
  std::ifstream in(dir + "/iterates.csv");
  if (!in) throw std::runtime_error("cannot read '" + dir + "/iterates.csv'");
  std::vector<SensorLayout> iterates;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("m,", 0) == 0) continue;
    std::istringstream ss(line);
    std::string ms, is, xs, ys;
    std::getline(ss, ms, ',');
    std::getline(ss, is, ',');
    std::getline(ss, xs, ',');
    std::getline(ss, ys);
    const std::size_t m = std::stoul(ms);
    if (iterates.size() <= m) iterates.resize(m + 1);
    iterates[m].positions.emplace_back(std::stod(xs), std::stod(ys));
  }
  const SensorLayout final_layout = read_layout_csv(dir + "/layout_final.csv");
  write_trajectory_svg(dir + "/trajectory.svg", scenario, iterates, final_layout);
}

}  // namespace plume
