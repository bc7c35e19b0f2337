#include "plume/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace plume {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw ParseError("scenario: unknown key '" + key + "' in " + where);
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key))
    throw ParseError("scenario: missing field '" + key + "' in " + where);
  return obj.at(key);
}

double num(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError("scenario: '" + where + "' must be a number");
  return v.get<double>();
}

Vec2 vec2(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2)
    throw ParseError("scenario: '" + where + "' must be a 2-element array");
  return Vec2(num(v[0], where), num(v[1], where));
}

constexpr double kDegToRad = M_PI / 180.0;

}  // namespace

std::pair<Scenario, WindModel> parse_scenario_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario: invalid JSON: ") + e.what());
  }
  reject_unknown(doc, {"sources", "diffusivity", "noise_sigma", "prior", "elastic",
                       "domain", "wind", "kernel_wind_speed_factor"},
                 "document root");

  Scenario sc;
  const json& sources = require(doc, "sources", "document root");
  if (!sources.is_array() || sources.empty())
    throw ParseError("scenario: 'sources' must be a non-empty array");
  for (std::size_t j = 0; j < sources.size(); ++j) {
    const json& s = sources[j];
    const std::string where = "sources[" + std::to_string(j) + "]";
    reject_unknown(s, {"x", "y", "height"}, where);
    SourceSpec src;
    src.location = Vec2(num(require(s, "x", where), where + ".x"),
                        num(require(s, "y", where), where + ".y"));
    src.stack_height = s.contains("height") ? num(s.at("height"), where + ".height") : 0.0;
    sc.sources.push_back(src);
  }

  sc.diffusivity_K = num(require(doc, "diffusivity", "document root"), "diffusivity");
  sc.noise_sigma = num(require(doc, "noise_sigma", "document root"), "noise_sigma");

  const json& prior = require(doc, "prior", "document root");
  reject_unknown(prior, {"mean", "sigma"}, "prior");
  const json& mean = require(prior, "mean", "prior");
  const int np = static_cast<int>(sc.sources.size());
  sc.prior_mean.resize(np);
  if (mean.is_number()) {
    sc.prior_mean.setConstant(mean.get<double>());
  } else if (mean.is_array() && static_cast<int>(mean.size()) == np) {
    for (int j = 0; j < np; ++j) sc.prior_mean[j] = num(mean[j], "prior.mean");
  } else {
    throw ParseError("scenario: 'prior.mean' must be a scalar or one entry per source");
  }
  sc.prior_sigma = num(require(prior, "sigma", "prior"), "prior.sigma");

  const json& elastic = require(doc, "elastic", "document root");
  reject_unknown(elastic, {"l1", "l2"}, "elastic");
  sc.elastic_l1 = num(require(elastic, "l1", "elastic"), "elastic.l1");
  sc.elastic_l2 = num(require(elastic, "l2", "elastic"), "elastic.l2");

  const json& domain = require(doc, "domain", "document root");
  reject_unknown(domain, {"lo", "hi"}, "domain");
  sc.domain_lo = vec2(require(domain, "lo", "domain"), "domain.lo");
  sc.domain_hi = vec2(require(domain, "hi", "domain"), "domain.hi");

  if (doc.contains("kernel_wind_speed_factor")) {
    const json& f = doc.at("kernel_wind_speed_factor");
    if (!f.is_boolean())
      throw ParseError("scenario: 'kernel_wind_speed_factor' must be a boolean");
    sc.kernel_wind_speed_factor = f.get<bool>();
  }

  const json& wind = require(doc, "wind", "document root");
  reject_unknown(wind, {"speed", "direction_deg"}, "wind");
  const Vec2 speed = vec2(require(wind, "speed", "wind"), "wind.speed");
  const Vec2 dir = vec2(require(wind, "direction_deg", "wind"), "wind.direction_deg");
  WindModel wm;
  wm.speed_lo = speed.x();
  wm.speed_hi = speed.y();
  wm.dir_lo = dir.x() * kDegToRad;
  wm.dir_hi = dir.y() * kDegToRad;

  try {
    sc.validate();
    wm.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  return {sc, wm};
}

std::pair<Scenario, WindModel> parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("scenario: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

namespace {
json number17(double v) { return json(v); }
}  // namespace

std::string serialize_scenario(const Scenario& sc, const WindModel& wm) {
  json doc;
  for (const auto& s : sc.sources)
    doc["sources"].push_back(
        {{"x", s.location.x()}, {"y", s.location.y()}, {"height", s.stack_height}});
  doc["diffusivity"] = number17(sc.diffusivity_K);
  doc["noise_sigma"] = number17(sc.noise_sigma);
  doc["prior"]["mean"] = std::vector<double>(sc.prior_mean.begin(), sc.prior_mean.end());
  doc["prior"]["sigma"] = number17(sc.prior_sigma);
  doc["elastic"]["l1"] = number17(sc.elastic_l1);
  doc["elastic"]["l2"] = number17(sc.elastic_l2);
  doc["domain"]["lo"] = {sc.domain_lo.x(), sc.domain_lo.y()};
  doc["domain"]["hi"] = {sc.domain_hi.x(), sc.domain_hi.y()};
  doc["wind"]["speed"] = {wm.speed_lo, wm.speed_hi};
  doc["wind"]["direction_deg"] = {wm.dir_lo / kDegToRad, wm.dir_hi / kDegToRad};
  doc["kernel_wind_speed_factor"] = sc.kernel_wind_speed_factor;
  return doc.dump(2);
}

std::uint64_t scenario_hash(const Scenario& sc, const WindModel& wm) {
  const std::string text = serialize_scenario(sc, wm);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace plume
