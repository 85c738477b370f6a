#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvforge/cascade.hpp"
#include "nvforge/damage.hpp"
#include "nvforge/linewidth_stats.hpp"
#include "nvforge/target.hpp"
#include "nvforge/version.hpp"

namespace nvforge::io {

using json = nlohmann::json;

inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Emitted with every output artifact; identical inputs give identical
// artifacts up to the wall_time_s field.
struct RunManifest {
  std::string subcommand;
  std::string config_hash;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;

  json to_json() const {
    return json{{"subcommand", subcommand},
                {"config_hash", config_hash},
                {"seed", seed},
                {"tool_version", kVersion},
                {"wall_time_s", wall_time_s}};
  }
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline json to_json(const Element& e) {
  return json{{"z", e.z}, {"mass_amu", e.mass_amu}};
}

inline Element element_from_json(const json& j) {
  return Element{j.at("z").get<int>(), j.at("mass_amu").get<double>()};
}

inline json to_json(const TargetMaterial& m) {
  json comps = json::array();
  for (const auto& c : m.components)
    comps.push_back(json{{"element", to_json(c.element)}, {"fraction", c.fraction}});
  return json{{"components", comps},
              {"density_g_cm3", m.mass_density_g_cm3},
              {"ed_ev", m.displacement_energy_ev},
              {"eb_ev", m.lattice_binding_ev},
              {"es_ev", m.surface_binding_ev}};
}

inline TargetMaterial material_from_json(const json& j) {
  TargetMaterial m;
  for (const auto& c : j.at("components"))
    m.components.push_back(
        {element_from_json(c.at("element")), c.at("fraction").get<double>()});
  m.mass_density_g_cm3 = j.at("density_g_cm3").get<double>();
  m.displacement_energy_ev = j.at("ed_ev").get<double>();
  m.lattice_binding_ev = j.at("eb_ev").get<double>();
  m.surface_binding_ev = j.at("es_ev").get<double>();
  return m;
}

inline json to_json(const IonBeam& b) {
  return json{{"ion", to_json(b.ion)},
              {"charge_state", b.charge_state},
              {"energy_kev", b.energy_kev},
              {"fluence_per_cm2", b.fluence_per_cm2},
              {"tilt_deg", b.tilt_deg}};
}

inline IonBeam beam_from_json(const json& j) {
  IonBeam b;
  b.ion = element_from_json(j.at("ion"));
  b.charge_state = j.at("charge_state").get<int>();
  b.energy_kev = j.at("energy_kev").get<double>();
  b.fluence_per_cm2 = j.at("fluence_per_cm2").get<double>();
  b.tilt_deg = j.at("tilt_deg").get<double>();
  return b;
}

inline json to_json(const damage::DepthHistogram& h) {
  return json{{"bin_edges_nm", h.bin_edges_nm},
              {"counts", h.counts},
              {"normalization_ions", h.normalization_ions},
              {"empty_warning", h.empty_warning}};
}

inline damage::DepthHistogram histogram_from_json(const json& j,
                                                  damage::HistogramKind kind) {
  damage::DepthHistogram h;
  h.bin_edges_nm = j.at("bin_edges_nm").get<std::vector<double>>();
  h.counts = j.at("counts").get<std::vector<double>>();
  h.normalization_ions = j.at("normalization_ions").get<int>();
  h.empty_warning = j.value("empty_warning", false);
  h.kind = kind;
  return h;
}

// Schema of the `implant` artifact.
inline json implant_result_json(const RunManifest& manifest, const IonBeam& beam,
                                const TargetMaterial& target,
                                const std::string& mode, double slab_nm,
                                const std::vector<bca::CascadeRecord>& records,
                                const damage::DepthHistogram& ions,
                                const damage::DepthHistogram& vacancies) {
  int backscattered = 0, transmitted = 0;
  for (const auto& r : records) {
    if (r.terminal == bca::Terminal::kBackscattered) ++backscattered;
    if (r.terminal == bca::Terminal::kTransmitted) ++transmitted;
  }
  return json{{"meta", manifest.to_json()},
              {"beam", to_json(beam)},
              {"target", to_json(target)},
              {"mode", mode},
              {"slab_thickness_nm", slab_nm},
              {"ions", to_json(ions)},
              {"vacancies", to_json(vacancies)},
              {"backscattered", backscattered},
              {"transmitted", transmitted},
              {"vacancies_per_ion", damage::vacancy_yield(records)}};
}

inline void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

inline void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  json j;
  in >> j;
  return j;
}

// Two-column (or wider) numeric CSV; '#' comment lines and a non-numeric
// header row are skipped.
inline std::vector<std::vector<double>> read_csv(const std::string& path,
                                                 std::size_t min_columns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    std::string cell;
    std::istringstream ls(line);
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) continue;  // header row
    if (row.size() < min_columns)
      throw std::runtime_error("csv row with fewer than " +
                               std::to_string(min_columns) + " columns in " + path);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Linewidth sample table: fwhm_mhz, thickness_um, sample, region.
inline std::vector<stats::LinewidthSample> read_linewidth_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<stats::LinewidthSample> samples;
  std::string line;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ls(line);
    std::string c0, c1, c2, c3;
    std::getline(ls, c0, ',');
    std::getline(ls, c1, ',');
    std::getline(ls, c2, ',');
    std::getline(ls, c3, ',');
    stats::LinewidthSample s;
    try {
      s.fwhm_mhz = std::stod(c0);
      s.thickness_um = std::stod(c1);
    } catch (const std::exception&) {
      continue;  // header row
    }
    s.sample_label = trim(c2);
    s.region_label = trim(c3);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace nvforge::io
