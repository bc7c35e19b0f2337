// Command-line front end: scenario in, CSV/SVG artifacts out.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "plume/aopt.hpp"
#include "plume/outer.hpp"
#include "plume/report_io.hpp"
#include "plume/sampling.hpp"
#include "plume/scenario_io.hpp"
#include "plume/validation.hpp"

namespace {

using nlohmann::json;
using namespace plume;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ParseError("config: unknown key '" + key + "' in " + where);
}

InnerConfig parse_inner(const json& doc) {
  InnerConfig inner;
  if (!doc.contains("inner")) return inner;
  const json& j = doc.at("inner");
  reject_unknown(j, {"gamma", "tau", "max_iters", "kkt_tol", "active_tol_scale", "early_exit"},
                 "inner");
  if (j.contains("gamma")) inner.gamma = j.at("gamma").get<double>();
  if (j.contains("tau")) inner.tau = j.at("tau").get<double>();
  if (j.contains("max_iters")) inner.max_iters = j.at("max_iters").get<int>();
  if (j.contains("kkt_tol")) inner.kkt_tol = j.at("kkt_tol").get<double>();
  if (j.contains("active_tol_scale"))
    inner.active_tol_scale = j.at("active_tol_scale").get<double>();
  if (j.contains("early_exit")) inner.early_exit = j.at("early_exit").get<bool>();
  return inner;
}

AnnealConfig parse_anneal(const json& doc) {
  AnnealConfig cfg;
  if (!doc.contains("anneal")) return cfg;
  const json& j = doc.at("anneal");
  reject_unknown(j, {"iterations", "initial_temp", "cooling", "proposal_sigma", "restarts",
                     "mc_wind_samples"},
                 "anneal");
  if (j.contains("iterations")) cfg.iterations = j.at("iterations").get<int>();
  if (j.contains("initial_temp")) cfg.initial_temp = j.at("initial_temp").get<double>();
  if (j.contains("cooling")) cfg.cooling = j.at("cooling").get<double>();
  if (j.contains("proposal_sigma")) cfg.proposal_sigma = j.at("proposal_sigma").get<double>();
  if (j.contains("restarts")) cfg.restarts = j.at("restarts").get<int>();
  if (j.contains("mc_wind_samples")) cfg.mc_wind_samples = j.at("mc_wind_samples").get<int>();
  return cfg;
}

std::vector<int> parse_free_coords(const json& doc, int n_sensors) {
  if (!doc.contains("free_coords")) return {};
  const json& j = doc.at("free_coords");
  std::vector<int> coords;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "all") return {};
    if (s == "x") {
      for (int i = 0; i < n_sensors; ++i) coords.push_back(2 * i);
      return coords;
    }
    if (s == "y") {
      for (int i = 0; i < n_sensors; ++i) coords.push_back(2 * i + 1);
      return coords;
    }
    throw ParseError("config: free_coords must be 'all', 'x', 'y' or an index list");
  }
  for (const auto& v : j) coords.push_back(v.get<int>());
  return coords;
}

SensorLayout random_layout(const Scenario& sc, int n_sensors, RngStream stream) {
  StreamRng rng(stream);
  SensorLayout layout;
  layout.positions.resize(n_sensors);
  for (int i = 0; i < n_sensors; ++i)
    layout.positions[i] = Vec2(rng.uniform(sc.domain_lo.x(), sc.domain_hi.x()),
                               rng.uniform(sc.domain_lo.y(), sc.domain_hi.y()));
  return layout;
}

SensorLayout resolve_init(const std::string& spec, const Scenario& sc,
                          const WindModel& wm, int n_sensors, const AnnealConfig& anneal,
                          std::uint64_t seed) {
  if (spec == "random")
    return random_layout(sc, n_sensors, substream(RngStream{seed, 0}, 0, 0, 0,
                                                  static_cast<std::uint64_t>(DrawPurpose::init)));
  if (spec == "aopt") return anneal_layout(sc, wm, n_sensors, anneal, seed).layout;
  return read_layout_csv(spec);
}

struct GlobalArgs {
  std::string scenario_path;
  std::string out_dir = ".";
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 0;
};

int cmd_simulate(const GlobalArgs& g, const std::string& layout_path, int count) {
  auto [sc, wm] = parse_scenario(g.scenario_path);
  const SensorLayout layout = read_layout_csv(layout_path);
  validate_layout(sc, layout);
  const auto batch = draw_batch(sc, wm, layout, count, RngStream{g.seed, 0});
  std::filesystem::create_directories(g.out_dir);
  std::ofstream out(g.out_dir + "/samples.csv", std::ios::binary);
  out << "sample,kind,index,value\n" << csv_metadata(g.seed, scenario_hash(sc, wm)) << "\n";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (Eigen::Index j = 0; j < batch[i].theta.size(); ++j)
      out << i << ",theta," << j << "," << format_g17(batch[i].theta[j]) << "\n";
    out << i << ",wind,0," << format_g17(batch[i].beta.beta.x()) << "\n";
    out << i << ",wind,1," << format_g17(batch[i].beta.beta.y()) << "\n";
    for (Eigen::Index j = 0; j < batch[i].phi.size(); ++j)
      out << i << ",phi," << j << "," << format_g17(batch[i].phi[j]) << "\n";
  }
  return 0;
}

int cmd_solve_inverse(const GlobalArgs& g, const std::string& layout_path,
                      const std::string& obs_path, const std::string& wind_arg) {
  auto [sc, wm] = parse_scenario(g.scenario_path);
  const SensorLayout layout = read_layout_csv(layout_path);
  validate_layout(sc, layout);

  WindVector wind;
  if (!wind_arg.empty()) {
    std::istringstream ss(wind_arg);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b))
      throw ParseError("--wind expects 'bx,by'");
    wind.beta = Vec2(std::stod(a), std::stod(b));
  } else {
    wind = draw_wind(wm, sample_stream(RngStream{g.seed, 0}, 0, DrawPurpose::wind));
  }

  Eigen::VectorXd phi(layout.size());
  {
    std::ifstream in(obs_path);
    if (!in) throw ParseError("cannot read observations '" + obs_path + "'");
    std::string line;
    int i = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || !(std::isdigit(line[0]) || line[0] == '-'))
        continue;
      std::istringstream ss(line);
      std::string idx, val;
      std::getline(ss, idx, ',');
      std::getline(ss, val);
      if (i >= layout.size()) throw ParseError("more observations than sensors");
      phi[i++] = std::stod(val);
    }
    if (i != layout.size()) throw ParseError("observation count does not match sensors");
  }

  InnerConfig inner;
  if (!g.config_path.empty()) inner = parse_inner(load_json(g.config_path));
  const QpSolution sol = solve_pd(assemble_qp(sc, wind, layout, phi), inner);
  if (sol.status == SolveStatus::diverged) {
    std::cerr << "inner solver diverged\n";
    return 1;
  }
  std::filesystem::create_directories(g.out_dir);
  std::ofstream out(g.out_dir + "/estimates.csv", std::ios::binary);
  out << "source,theta_hat,eta_hat\n" << csv_metadata(g.seed, scenario_hash(sc, wm)) << "\n";
  for (Eigen::Index j = 0; j < sol.theta_hat.size(); ++j)
    out << j << "," << format_g17(sol.theta_hat[j]) << "," << format_g17(sol.eta_hat[j])
        << "\n";
  return 0;
}

int cmd_init_aopt(const GlobalArgs& g, int n_sensors) {
  auto [sc, wm] = parse_scenario(g.scenario_path);
  AnnealConfig cfg;
  if (!g.config_path.empty()) cfg = parse_anneal(load_json(g.config_path));
  const AnnealResult res = anneal_layout(sc, wm, n_sensors, cfg, g.seed);
  std::filesystem::create_directories(g.out_dir);
  write_layout_csv(g.out_dir + "/layout_init.csv", res.layout,
                   csv_metadata(g.seed, scenario_hash(sc, wm)));
  std::ofstream out(g.out_dir + "/risk.csv", std::ios::binary);
  out << "key,value\n" << csv_metadata(g.seed, scenario_hash(sc, wm)) << "\n";
  out << "risk," << format_g17(res.risk) << "\n";
  return 0;
}

int cmd_optimize(const GlobalArgs& g, const std::string& algorithm) {
  auto [sc, wm] = parse_scenario(g.scenario_path);
  json doc = json::object();
  if (!g.config_path.empty()) doc = load_json(g.config_path);
  reject_unknown(doc, {"M", "batch_size", "runs", "rho0", "decaying_rho", "eval_N", "alpha",
                       "trace_every", "warm_start", "align_runs", "inner", "n_sensors",
                       "init", "free_coords", "anneal"},
                 "optimizer config");

  OuterConfig cfg;
  cfg.algorithm = algorithm == "rsaa" ? OuterAlgorithm::rsaa : OuterAlgorithm::sba;
  if (doc.contains("M")) cfg.outer_iters = doc.at("M").get<int>();
  if (doc.contains("batch_size")) cfg.batch_size = doc.at("batch_size").get<int>();
  if (doc.contains("runs")) cfg.runs = doc.at("runs").get<int>();
  if (doc.contains("rho0")) cfg.rho0 = doc.at("rho0").get<double>();
  if (doc.contains("decaying_rho")) cfg.decaying_rho = doc.at("decaying_rho").get<bool>();
  if (doc.contains("eval_N")) cfg.eval_N = doc.at("eval_N").get<int>();
  if (doc.contains("alpha")) cfg.alpha = doc.at("alpha").get<double>();
  if (doc.contains("trace_every")) cfg.trace_every = doc.at("trace_every").get<int>();
  if (doc.contains("warm_start")) cfg.warm_start = doc.at("warm_start").get<bool>();
  if (doc.contains("align_runs")) cfg.align_runs = doc.at("align_runs").get<bool>();
  cfg.inner = parse_inner(doc);

  const int n_sensors = doc.contains("n_sensors") ? doc.at("n_sensors").get<int>() : 1;
  cfg.free_coords = parse_free_coords(doc, n_sensors);
  const std::string init_spec =
      doc.contains("init") ? doc.at("init").get<std::string>() : "random";
  const SensorLayout init =
      resolve_init(init_spec, sc, wm, n_sensors, parse_anneal(doc), g.seed);

  RunReport report;
  if (cfg.algorithm == OuterAlgorithm::rsaa)
    report = run_rsaa(sc, wm, cfg, {init}, g.seed);
  else
    report = run_sba(sc, wm, cfg, init, g.seed);
  write_run_report(g.out_dir, report, sc, g.seed, scenario_hash(sc, wm));
  return report.diagnostics.aborted ? 1 : 0;
}

int cmd_grid_oracle(const GlobalArgs& g) {
  auto [sc, wm] = parse_scenario(g.scenario_path);
  if (g.config_path.empty()) throw ParseError("grid-oracle requires --config");
  const json doc = load_json(g.config_path);
  reject_unknown(doc, {"layout", "free_coords", "points", "eval_N", "inner"},
                 "grid-oracle config");
  if (!doc.contains("layout")) throw ParseError("grid-oracle config: missing 'layout'");
  const SensorLayout tmpl = read_layout_csv(doc.at("layout").get<std::string>());
  std::vector<int> free_coords;
  for (const auto& v : doc.at("free_coords")) free_coords.push_back(v.get<int>());
  const int points = doc.contains("points") ? doc.at("points").get<int>() : 100;
  const int eval_N = doc.contains("eval_N") ? doc.at("eval_N").get<int>() : 10000;
  const GridOracleResult res =
      grid_oracle(sc, wm, tmpl, free_coords, points, eval_N, parse_inner(doc), g.seed);
  write_grid_curve(g.out_dir, res, g.seed, scenario_hash(sc, wm));
  return 0;
}

int cmd_validate(const GlobalArgs& g) {
  auto [sc, wm] = parse_scenario(g.scenario_path);
  if (g.config_path.empty()) throw ParseError("validate requires --config");
  const json doc = load_json(g.config_path);
  reject_unknown(doc, {"designs", "trials", "sweep_trials", "n_sensors", "inner", "anneal"},
                 "validate config");
  const int n_sensors = doc.contains("n_sensors") ? doc.at("n_sensors").get<int>() : 1;
  ValidationOptions opts;
  if (doc.contains("trials")) opts.trials = doc.at("trials").get<int>();
  if (doc.contains("sweep_trials")) opts.sweep_trials = doc.at("sweep_trials").get<int>();
  opts.inner = parse_inner(doc);

  std::vector<NamedLayout> designs;
  for (const auto& d : doc.at("designs")) {
    reject_unknown(d, {"name", "layout"}, "designs entry");
    NamedLayout nl;
    nl.name = d.at("name").get<std::string>();
    nl.layout = resolve_init(d.at("layout").get<std::string>(), sc, wm, n_sensors,
                             parse_anneal(doc), g.seed);
    designs.push_back(std::move(nl));
  }
  const ValidationReport report = validate_designs(sc, wm, designs, opts, g.seed);
  write_validation_report(g.out_dir, report, g.seed, scenario_hash(sc, wm));
  return 0;
}

int cmd_report(const GlobalArgs& g) {
  auto [sc, wm] = parse_scenario(g.scenario_path);
  (void)wm;
  render_svg_from_csv(g.out_dir, sc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensor placement for emission-rate estimation under a Gaussian plume model"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--scenario", g.scenario_path, "Scenario JSON file")->required();
  app.add_option("--seed", g.seed, "RNG seed");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--threads", g.threads, "Worker thread cap (0 = default)");
  app.add_option("--config", g.config_path, "Optimizer/tool settings JSON");

  std::string layout_path, obs_path, wind_arg, algorithm;
  int count = 1, n_sensors = 1;

  auto* simulate = app.add_subcommand("simulate", "Synthesize observation samples");
  simulate->add_option("--layout", layout_path, "Sensor layout CSV")->required();
  simulate->add_option("--count", count, "Number of samples");

  auto* solve = app.add_subcommand("solve-inverse", "Solve one inverse problem");
  solve->add_option("--layout", layout_path, "Sensor layout CSV")->required();
  solve->add_option("--observations", obs_path, "Observations CSV")->required();
  solve->add_option("--wind", wind_arg, "Wind vector 'bx,by' (default: drawn)");

  auto* init = app.add_subcommand("init-aopt", "Annealed A-optimal initial layout");
  init->add_option("--sensors", n_sensors, "Number of sensors")->required();

  auto* optimize = app.add_subcommand("optimize", "Run a bilevel optimizer");
  optimize->add_option("algorithm", algorithm, "rsaa or sba")
      ->required()
      ->check(CLI::IsMember({"rsaa", "sba"}));

  auto* grid = app.add_subcommand("grid-oracle", "Exhaustive sweep over free coordinates");
  auto* validate = app.add_subcommand("validate", "Compare designs by recovery error");
  auto* report = app.add_subcommand("report", "Re-render SVG from CSV outputs");
  (void)grid;
  (void)validate;
  (void)report;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

#ifdef _OPENMP
  if (g.threads > 0) omp_set_num_threads(g.threads);
#endif

  try {
    if (simulate->parsed()) return cmd_simulate(g, layout_path, count);
    if (solve->parsed()) return cmd_solve_inverse(g, layout_path, obs_path, wind_arg);
    if (init->parsed()) return cmd_init_aopt(g, n_sensors);
    if (optimize->parsed()) return cmd_optimize(g, algorithm);
    if (grid->parsed()) return cmd_grid_oracle(g);
    if (validate->parsed()) return cmd_validate(g);
    if (report->parsed()) return cmd_report(g);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
