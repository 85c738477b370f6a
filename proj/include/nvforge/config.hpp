#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "nvforge/cascade.hpp"
#include "nvforge/ple.hpp"
#include "nvforge/target.hpp"

namespace nvforge::cfg {

// Minimal structured-text config: [section] headers, key = value pairs,
// '#' or ';' comments.
class Config {
 public:
  static Config parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw std::invalid_argument("config line " + std::to_string(lineno) +
                                      ": unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": empty key");
      cfg.values_[section][key] = value;
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = values_.find(section);
    return s != values_.end() && s->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    const auto s = values_.find(section);
    if (s == values_.end()) return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
  }

  double get_number(const std::string& section, const std::string& key,
                    double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& raw = values_.at(section).at(key);
    std::size_t used = 0;
    const double v = std::stod(raw, &used);
    if (used != raw.size())
      throw std::invalid_argument("config [" + section + "] " + key +
                                  ": not a number: " + raw);
    return v;
  }

  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& raw = values_.at(section).at(key);
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw std::invalid_argument("config [" + section + "] " + key +
                                ": not a boolean: " + raw);
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  std::map<std::string, std::map<std::string, std::string>> values_;
};

inline Element parse_ion(std::string name) {
  for (auto& c : name) c = static_cast<char>(std::tolower(c));
  if (name == "c" || name == "c12" || name == "12c") return presets::carbon12();
  if (name == "n" || name == "n15" || name == "15n") return presets::nitrogen15();
  throw std::invalid_argument("unknown ion: " + name + " (expected C12 or N15)");
}

inline IonBeam beam_from(const Config& cfg) {
  IonBeam beam;
  beam.ion = parse_ion(cfg.get_string("beam", "ion", "C12"));
  beam.energy_kev = cfg.get_number("beam", "energy_kev", 12.0);
  beam.fluence_per_cm2 =
      cfg.get_number("beam", "fluence_per_cm2", beam.energy_kev < 25.0 ? 1e10 : 5e8);
  beam.tilt_deg = cfg.get_number("beam", "tilt_deg", 7.0);
  beam.validate();
  return beam;
}

inline TargetMaterial target_from(const Config& cfg) {
  TargetMaterial mat = presets::diamond();
  mat.mass_density_g_cm3 = cfg.get_number("target", "density_g_cm3", mat.mass_density_g_cm3);
  mat.displacement_energy_ev = cfg.get_number("target", "ed_ev", mat.displacement_energy_ev);
  mat.lattice_binding_ev = cfg.get_number("target", "eb_ev", mat.lattice_binding_ev);
  mat.surface_binding_ev = cfg.get_number("target", "es_ev", mat.surface_binding_ev);
  mat.validate();
  return mat;
}

inline bca::TransportOptions transport_from(const Config& cfg) {
  bca::TransportOptions opt;
  opt.low_energy_cutoff_ev =
      cfg.get_number("transport", "cutoff_ev", opt.low_energy_cutoff_ev);
  opt.robinson_partition =
      cfg.get_bool("transport", "robinson_partition", opt.robinson_partition);
  opt.use_stopping_calibration =
      cfg.get_bool("transport", "stopping_calibration", opt.use_stopping_calibration);
  opt.stopping_scale = cfg.get_number("transport", "stopping_scale", opt.stopping_scale);
  return opt;
}

inline ple::EmitterModel emitter_from(const Config& cfg) {
  ple::EmitterModel em;
  em.gamma_h_mhz = cfg.get_number("emitter", "gamma_h_mhz", em.gamma_h_mhz);
  em.center_offset_mhz = cfg.get_number("emitter", "center_offset_mhz", em.center_offset_mhz);
  em.jump_sigma_mhz = cfg.get_number("emitter", "jump_sigma_mhz", em.jump_sigma_mhz);
  em.saturation = cfg.get_number("emitter", "saturation", em.saturation);
  em.ionization_prob = cfg.get_number("emitter", "ionization_prob", em.ionization_prob);
  em.repump_recovery_prob =
      cfg.get_number("emitter", "repump_recovery_prob", em.repump_recovery_prob);
  em.background_rate_cps =
      cfg.get_number("emitter", "background_rate_cps", em.background_rate_cps);
  em.random_walk_jumps = cfg.get_bool("emitter", "random_walk_jumps", em.random_walk_jumps);
  em.validate();
  return em;
}

inline ple::PleScanConfig scan_from(const Config& cfg) {
  ple::PleScanConfig sc;
  sc.repump_us = cfg.get_number("scan", "repump_us", sc.repump_us);
  sc.probe_us = cfg.get_number("scan", "probe_us", sc.probe_us);
  sc.rep_rate_khz = cfg.get_number("scan", "rep_rate_khz", sc.rep_rate_khz);
  sc.dwell_ms = cfg.get_number("scan", "dwell_ms", sc.dwell_ms);
  sc.detuning_min_mhz = cfg.get_number("scan", "detuning_min_mhz", sc.detuning_min_mhz);
  sc.detuning_max_mhz = cfg.get_number("scan", "detuning_max_mhz", sc.detuning_max_mhz);
  sc.detuning_step_mhz = cfg.get_number("scan", "detuning_step_mhz", sc.detuning_step_mhz);
  sc.n_scans = static_cast<int>(cfg.get_number("scan", "n_scans", sc.n_scans));
  sc.collection_rate_cps =
      cfg.get_number("scan", "collection_rate_cps", sc.collection_rate_cps);
  sc.validate();
  return sc;
}

}  // namespace nvforge::cfg
