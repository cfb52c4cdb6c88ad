#include "dsq/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "dsq/calibration.hpp"
#include "dsq/errors.hpp"
#include "json.hpp"

namespace dsq {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kDeg = std::numbers::pi / 180.0;

void reject_unknown(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string_view> keys(allowed);
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

double power_from_json(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && v.get<std::string>() == "-inf") return -std::numeric_limits<double>::infinity();
  throw ConfigError("displacement powers must be numbers or \"-inf\"");
}

ordered_json power_to_json(double p) {
  if (std::isinf(p) && p < 0) return "-inf";
  return p;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.chain.noise_photons_1 = 10.0;
  c.chain.noise_photons_2 = 10.0;
  c.sweep.displacement_powers_dbm = {-std::numeric_limits<double>::infinity()};
  for (int p = -155; p <= -125; p += 5) c.sweep.displacement_powers_dbm.push_back(p);
  c.sweep.thetas_deg = {45.0, 135.0};
  c.wigner.cases = {{"a", std::nullopt, 0.0, 135.0}, {"b", -125.0, std::nullopt, 135.0},
                    {"c", -125.0, std::nullopt, 45.0}};
  return c;
}

void ExperimentConfig::validate() const {
  try {
    jpa.validate();
    coupler.validate();
    chain.validate();
    rf.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (sweep.displacement_powers_dbm.empty()) throw ConfigError("sweep.displacement_powers_dbm must not be empty");
  if (sweep.thetas_deg.empty()) throw ConfigError("sweep.thetas_deg must not be empty");
  for (double p : sweep.displacement_powers_dbm) {
    if (std::isnan(p) || p == std::numeric_limits<double>::infinity()) {
      throw ConfigError("displacement powers must be finite or -inf");
    }
  }
  for (double t : sweep.thetas_deg) {
    if (!std::isfinite(t)) throw ConfigError("sweep angles must be finite");
  }
  if (samples_per_point < 1) throw ConfigError("samples_per_point must be at least 1");
  if (jackknife_blocks < 2) throw ConfigError("jackknife_blocks must be at least 2");
  if (wigner.resolution < 2) throw ConfigError("wigner.resolution must be at least 2");
  if (wigner.half_range && !(*wigner.half_range > 0.0)) throw ConfigError("wigner.half_range must be positive");
  for (const auto& w : wigner.cases) {
    if (w.power_dbm.has_value() == w.photons.has_value()) {
      throw ConfigError("wigner case '" + w.label + "' needs exactly one of power_dbm and photons");
    }
    if (w.photons && !(*w.photons >= 0.0)) throw ConfigError("wigner photons must be non-negative");
  }
  if (calibration) {
    if (calibration->temperatures_k.size() < 3) throw ConfigError("calibration needs at least three temperatures");
    for (std::size_t i = 0; i < calibration->temperatures_k.size(); ++i) {
      const double t = calibration->temperatures_k[i];
      if (!(t > 0.0) || (i > 0 && !(t > calibration->temperatures_k[i - 1]))) {
        throw ConfigError("calibration temperatures must be positive and strictly increasing");
      }
    }
    if (calibration->samples_per_point == 1) throw ConfigError("calibration needs 0 or at least 2 samples per point");
  }
}

ExperimentConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, "config",
                 {"jpa", "coupler", "chain", "rf", "sweep", "wigner", "calibration", "samples_per_point", "seed",
                  "jackknife_blocks", "outputs"});
  ExperimentConfig c = ExperimentConfig::defaults();

  if (root.contains("jpa")) {
    const auto& j = root["jpa"];
    reject_unknown(j, "jpa", {"r", "phi_deg", "n_th"});
    double r = c.jpa.squeeze.r;
    double phi_deg = c.jpa.squeeze.phi / kDeg;
    read(j, "r", r, "jpa");
    read(j, "phi_deg", phi_deg, "jpa");
    read(j, "n_th", c.jpa.thermal_occupation, "jpa");
    try {
      c.jpa.squeeze = SqueezeParams(r, phi_deg * kDeg);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  if (root.contains("coupler")) {
    const auto& j = root["coupler"];
    reject_unknown(j, "coupler", {"coupling_db", "insertion_loss_db"});
    read(j, "coupling_db", c.coupler.coupling_db, "coupler");
    read(j, "insertion_loss_db", c.coupler.insertion_loss_db, "coupler");
  }
  if (root.contains("chain")) {
    const auto& j = root["chain"];
    reject_unknown(j, "chain", {"gain_1", "gain_2", "noise_photons_1", "noise_photons_2", "gain_error"});
    read(j, "gain_1", c.chain.gain_1, "chain");
    read(j, "gain_2", c.chain.gain_2, "chain");
    read(j, "noise_photons_1", c.chain.noise_photons_1, "chain");
    read(j, "noise_photons_2", c.chain.noise_photons_2, "chain");
    read(j, "gain_error", c.chain.gain_error, "chain");
  }
  if (root.contains("rf")) {
    const auto& j = root["rf"];
    reject_unknown(j, "rf", {"frequency_hz", "bandwidth_hz", "conversion_mode"});
    read(j, "frequency_hz", c.rf.carrier_frequency, "rf");
    read(j, "bandwidth_hz", c.rf.bandwidth, "rf");
    if (j.contains("conversion_mode")) {
      std::string mode;
      read(j, "conversion_mode", mode, "rf");
      try {
        c.rf.conversion = parse_photon_conversion(mode);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
    }
  }
  if (root.contains("sweep")) {
    const auto& j = root["sweep"];
    reject_unknown(j, "sweep", {"displacement_powers_dbm", "thetas_deg", "calibration_file"});
    if (j.contains("displacement_powers_dbm")) {
      if (!j["displacement_powers_dbm"].is_array()) throw ConfigError("sweep.displacement_powers_dbm must be a list");
      c.sweep.displacement_powers_dbm.clear();
      for (const auto& v : j["displacement_powers_dbm"]) c.sweep.displacement_powers_dbm.push_back(power_from_json(v));
    }
    read(j, "thetas_deg", c.sweep.thetas_deg, "sweep");
    if (j.contains("calibration_file")) {
      std::string file;
      read(j, "calibration_file", file, "sweep");
      c.sweep.calibration_file = file;
    }
  }
  if (root.contains("wigner")) {
    const auto& j = root["wigner"];
    reject_unknown(j, "wigner", {"cases", "half_range", "resolution"});
    if (j.contains("cases")) {
      if (!j["cases"].is_array()) throw ConfigError("wigner.cases must be a list");
      c.wigner.cases.clear();
      for (const auto& item : j["cases"]) {
        reject_unknown(item, "wigner case", {"label", "power_dbm", "photons", "theta_deg"});
        WignerCase w;
        read(item, "label", w.label, "wigner case");
        if (item.contains("power_dbm")) w.power_dbm = power_from_json(item["power_dbm"]);
        if (item.contains("photons")) {
          double n = 0.0;
          read(item, "photons", n, "wigner case");
          w.photons = n;
        }
        read(item, "theta_deg", w.theta_deg, "wigner case");
        if (w.label.empty()) w.label = "case" + std::to_string(c.wigner.cases.size());
        c.wigner.cases.push_back(w);
      }
    }
    if (j.contains("half_range")) {
      double h = 0.0;
      read(j, "half_range", h, "wigner");
      c.wigner.half_range = h;
    }
    read(j, "resolution", c.wigner.resolution, "wigner");
  }
  if (root.contains("calibration")) {
    const auto& j = root["calibration"];
    reject_unknown(j, "calibration", {"temperatures_k", "samples_per_point", "seed"});
    CalibrationSpec spec;
    spec.temperatures_k = default_calibration_temperatures();
    read(j, "temperatures_k", spec.temperatures_k, "calibration");
    read(j, "samples_per_point", spec.samples_per_point, "calibration");
    read(j, "seed", spec.seed, "calibration");
    c.calibration = spec;
  }
  read(root, "samples_per_point", c.samples_per_point, "config");
  read(root, "seed", c.seed, "config");
  read(root, "jackknife_blocks", c.jackknife_blocks, "config");
  if (root.contains("outputs")) {
    std::string out;
    read(root, "outputs", out, "config");
    c.outputs = out;
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig c = parse_config(buffer.str());
  // Relative calibration paths are resolved against the config file.
  if (c.sweep.calibration_file && c.sweep.calibration_file->is_relative()) {
    c.sweep.calibration_file = path.parent_path() / *c.sweep.calibration_file;
  }
  return c;
}

std::string to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["jpa"] = {{"r", c.jpa.squeeze.r}, {"phi_deg", c.jpa.squeeze.phi / kDeg}, {"n_th", c.jpa.thermal_occupation}};
  j["coupler"] = {{"coupling_db", c.coupler.coupling_db}, {"insertion_loss_db", c.coupler.insertion_loss_db}};
  j["chain"] = {{"gain_1", c.chain.gain_1},
                {"gain_2", c.chain.gain_2},
                {"noise_photons_1", c.chain.noise_photons_1},
                {"noise_photons_2", c.chain.noise_photons_2},
                {"gain_error", c.chain.gain_error}};
  j["rf"] = {{"frequency_hz", c.rf.carrier_frequency},
             {"bandwidth_hz", c.rf.bandwidth},
             {"conversion_mode", std::string(to_string(c.rf.conversion))}};
  ordered_json sweep;
  sweep["displacement_powers_dbm"] = ordered_json::array();
  for (double p : c.sweep.displacement_powers_dbm) sweep["displacement_powers_dbm"].push_back(power_to_json(p));
  sweep["thetas_deg"] = c.sweep.thetas_deg;
  if (c.sweep.calibration_file) sweep["calibration_file"] = c.sweep.calibration_file->string();
  j["sweep"] = sweep;
  ordered_json wigner;
  wigner["cases"] = ordered_json::array();
  for (const auto& w : c.wigner.cases) {
    ordered_json item;
    item["label"] = w.label;
    if (w.power_dbm) item["power_dbm"] = power_to_json(*w.power_dbm);
    if (w.photons) item["photons"] = *w.photons;
    item["theta_deg"] = w.theta_deg;
    wigner["cases"].push_back(item);
  }
  if (c.wigner.half_range) wigner["half_range"] = *c.wigner.half_range;
  wigner["resolution"] = c.wigner.resolution;
  j["wigner"] = wigner;
  if (c.calibration) {
    j["calibration"] = {{"temperatures_k", c.calibration->temperatures_k},
                        {"samples_per_point", c.calibration->samples_per_point},
                        {"seed", c.calibration->seed}};
  }
  j["samples_per_point"] = c.samples_per_point;
  j["seed"] = c.seed;
  j["jackknife_blocks"] = c.jackknife_blocks;
  if (!c.outputs.empty()) j["outputs"] = c.outputs.string();
  return j.dump(2);
}

}  // namespace dsq
