// nvforge command line: implantation, damage analysis, etalon thickness
// fitting, PLE simulation, linewidth statistics, and two-photon
// interference projections behind one binary.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nvforge/cascade.hpp"
#include "nvforge/config.hpp"
#include "nvforge/damage.hpp"
#include "nvforge/etalon.hpp"
#include "nvforge/hom.hpp"
#include "nvforge/json_io.hpp"
#include "nvforge/linewidth_stats.hpp"
#include "nvforge/ple.hpp"
#include "nvforge/version.hpp"

namespace fs = std::filesystem;
using nvforge::io::json;

namespace {

std::string slurp_if_exists(const std::string& path) {
  if (path.empty()) return "";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct ImplantArgs {
  std::string config_path;
  std::string out = "implant.json";
  std::string mode = "cascade";
  std::string ion;
  int ions = 10000;
  std::uint64_t seed = 42;
  double slab_nm = 500.0;
  double bin_width_nm = 0.0;  // 0 = pick by energy
  double energy_kev = 0.0;    // 0 = keep config value
  double fluence = 0.0;
  double tilt_deg = -1.0;
  int threads = 0;
};

json run_implant_to_json(const ImplantArgs& a) {
  nvforge::io::Stopwatch watch;
  nvforge::cfg::Config cfg = a.config_path.empty()
                                 ? nvforge::cfg::Config()
                                 : nvforge::cfg::Config::load(a.config_path);
  nvforge::IonBeam beam = nvforge::cfg::beam_from(cfg);
  nvforge::TargetMaterial target = nvforge::cfg::target_from(cfg);
  nvforge::bca::TransportOptions options = nvforge::cfg::transport_from(cfg);
  if (!a.ion.empty()) beam.ion = nvforge::cfg::parse_ion(a.ion);
  if (a.energy_kev > 0.0) {
    beam.energy_kev = a.energy_kev;
    if (a.fluence <= 0.0 && !cfg.has("beam", "fluence_per_cm2"))
      beam.fluence_per_cm2 = a.energy_kev < 25.0 ? 1e10 : 5e8;
  }
  if (a.fluence > 0.0) beam.fluence_per_cm2 = a.fluence;
  if (a.tilt_deg >= 0.0) beam.tilt_deg = a.tilt_deg;
  beam.validate();

  const auto mode = nvforge::bca::parse_damage_mode(a.mode);
  const auto records = nvforge::bca::run_implantation(
      beam, target, a.slab_nm, a.ions, mode, a.seed, a.threads, options);
  const double bin_width =
      a.bin_width_nm > 0.0 ? a.bin_width_nm : (beam.energy_kev < 25.0 ? 0.5 : 2.0);
  auto [ion_hist, vac_hist] = nvforge::damage::build_depth_histograms(records, bin_width);

  nvforge::io::RunManifest manifest;
  manifest.subcommand = "implant";
  std::ostringstream key;
  key << slurp_if_exists(a.config_path) << "|" << a.mode << "|" << a.ions << "|"
      << a.slab_nm << "|" << bin_width << "|" << nvforge::io::to_json(beam).dump();
  manifest.config_hash = nvforge::io::fnv1a_hex(key.str());
  manifest.seed = a.seed;
  manifest.wall_time_s = watch.seconds();
  return nvforge::io::implant_result_json(manifest, beam, target, a.mode,
                                          a.slab_nm, records, ion_hist, vac_hist);
}

struct InputSummary {
  nvforge::damage::DepthSummary ion;
  nvforge::damage::DepthSummary vac;
  json detail;
};

InputSummary summarize_implant_file(const std::string& path) {
  const json j = nvforge::io::read_json(path);
  const auto beam = nvforge::io::beam_from_json(j.at("beam"));
  const auto ion_hist = nvforge::io::histogram_from_json(
      j.at("ions"), nvforge::damage::HistogramKind::kImplantedIon);
  const auto vac_hist = nvforge::io::histogram_from_json(
      j.at("vacancies"), nvforge::damage::HistogramKind::kVacancy);

  InputSummary s;
  s.ion.kind = nvforge::damage::HistogramKind::kImplantedIon;
  s.ion.peak_depth_nm = nvforge::damage::peak_depth_nm(ion_hist);
  s.ion.species = beam.ion;
  s.ion.energy_kev = beam.energy_kev;
  s.vac = s.ion;
  s.vac.kind = nvforge::damage::HistogramKind::kVacancy;
  s.vac.peak_depth_nm = nvforge::damage::peak_depth_nm(vac_hist);
  s.vac.vacancies_per_ion = j.at("vacancies_per_ion").get<double>();
  s.ion.vacancies_per_ion = s.vac.vacancies_per_ion;

  s.detail = json{{"file", path},
                  {"ion", nvforge::io::to_json(beam.ion)},
                  {"energy_kev", beam.energy_kev},
                  {"mode", j.value("mode", "")},
                  {"ion_peak_depth_nm", s.ion.peak_depth_nm},
                  {"vacancy_peak_depth_nm", s.vac.peak_depth_nm},
                  {"vacancies_per_ion", s.vac.vacancies_per_ion},
                  {"backscattered", j.at("backscattered").get<int>()},
                  {"transmitted", j.at("transmitted").get<int>()}};
  return s;
}

json stats_payload(const std::vector<nvforge::stats::LinewidthSample>& samples,
                   double threshold_mhz) {
  std::vector<double> widths;
  for (const auto& s : samples) widths.push_back(s.fwhm_mhz);

  json by_sample = json::object();
  std::map<std::string, std::vector<double>> groups;
  for (const auto& s : samples) groups[s.sample_label].push_back(s.fwhm_mhz);
  for (const auto& [label, vals] : groups) {
    json entry{{"n", vals.size()},
               {"fraction_below", nvforge::stats::fraction_below(vals, threshold_mhz)}};
    if (vals.size() >= 3) {
      const auto fit = nvforge::stats::lognormal_mle(vals);
      entry["lognormal"] = json{{"mu", fit.mu},
                                {"sigma", fit.sigma},
                                {"median_mhz", fit.median_mhz},
                                {"geometric_std", fit.geometric_std},
                                {"n", fit.n}};
      double mean = 0.0;
      for (double v : vals) mean += v;
      entry["mean_mhz"] = mean / vals.size();
    }
    by_sample[label] = entry;
  }

  const auto band = nvforge::stats::ecdf_with_band(widths);
  const auto table = nvforge::stats::median_by_thickness(samples);
  json regions = json::array();
  for (const auto& row : table.rows)
    regions.push_back(json{{"region", row.region},
                           {"thickness_um", row.thickness_um},
                           {"median_mhz", row.fit.median_mhz},
                           {"geometric_std", row.fit.geometric_std},
                           {"n", row.fit.n}});

  json out{{"n", samples.size()},
           {"threshold_mhz", threshold_mhz},
           {"fraction_below", nvforge::stats::fraction_below(widths, threshold_mhz)},
           {"by_sample", by_sample},
           {"ecdf", json{{"x", band.x},
                         {"f", band.f},
                         {"lower", band.lower},
                         {"upper", band.upper},
                         {"epsilon", band.epsilon}}},
           {"by_region", regions},
           {"excluded_regions", table.excluded_regions}};
  if (samples.size() >= 3) {
    const auto fit = nvforge::stats::lognormal_mle(widths);
    out["lognormal"] = json{{"mu", fit.mu},
                            {"sigma", fit.sigma},
                            {"median_mhz", fit.median_mhz},
                            {"geometric_std", fit.geometric_std},
                            {"n", fit.n}};
  }
  return out;
}

void write_scan_csv(const std::string& path, const nvforge::io::RunManifest& manifest,
                    const nvforge::ple::PleScan& scan) {
  std::ostringstream out;
  const json meta = manifest.to_json();
  for (auto it = meta.begin(); it != meta.end(); ++it)
    out << "# " << it.key() << ": " << it.value().dump() << "\n";
  out << "detuning_MHz,counts\n";
  for (std::size_t i = 0; i < scan.detuning_mhz.size(); ++i)
    out << scan.detuning_mhz[i] << "," << scan.mean_counts[i] << "\n";
  nvforge::io::write_text(path, out.str());
}

nvforge::ple::PleScan read_scan_csv(const std::string& path) {
  const auto rows = nvforge::io::read_csv(path, 2);
  nvforge::ple::PleScan scan;
  for (const auto& r : rows) {
    scan.detuning_mhz.push_back(r[0]);
    scan.mean_counts.push_back(r[1]);
  }
  return scan;
}

// Bundled reference statistics (per-sample medians/means and narrow-line
// fractions) used by the reproduce recipes.
json reference_stats() {
  return json{
      {"samples",
       {{"A", {{"median_mhz", 143.0}, {"mean_mhz", 227.0}, {"thickness_span_um", {1.9, 4.6}}, {"energy_kev", 55.0}, {"regions", 5}}},
        {"B", {{"median_mhz", 138.0}, {"mean_mhz", 181.0}, {"thickness_span_um", {1.9, 4.9}}, {"energy_kev", 55.0}, {"regions", 5}}},
        {"C", {{"median_mhz", 304.0}, {"mean_mhz", 691.0}, {"thickness_span_um", {2.5, 2.5}}, {"energy_kev", 12.0}, {"regions", 1}}}}},
      {"narrow_threshold_mhz", 150.0},
      {"fraction_below", {{"AB", 0.54}, {"C", 0.26}, {"all", 0.48}, {"thin_structures", 0.52}}}};
}

std::vector<nvforge::stats::LinewidthSample> synthesize_population(
    const json& ref, std::uint64_t seed, int per_sample) {
  std::vector<nvforge::stats::LinewidthSample> samples;
  std::uint64_t stream = 0;
  for (const auto& [label, spec] : ref.at("samples").items()) {
    const double median = spec.at("median_mhz").get<double>();
    const double mean = spec.at("mean_mhz").get<double>();
    const double mu = std::log(median);
    const double sigma = std::sqrt(2.0 * std::log(mean / median));
    const auto span = spec.at("thickness_span_um").get<std::vector<double>>();
    const int regions = spec.at("regions").get<int>();
    nvforge::RngStream rng(seed, stream++);
    for (int i = 0; i < per_sample; ++i) {
      nvforge::stats::LinewidthSample s;
      s.fwhm_mhz = std::exp(mu + sigma * rng.normal());
      const int region = i % regions;
      const double frac = regions > 1 ? static_cast<double>(region) / (regions - 1) : 0.0;
      s.thickness_um = span[0] + frac * (span[1] - span[0]);
      s.sample_label = label;
      s.region_label = label + std::to_string(region + 1);
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

bool approx_within(double value, double target, double rel_tol) {
  return std::abs(value - target) <= rel_tol * std::abs(target);
}

int run_reproduce(const std::string& figure, const std::string& outdir,
                  std::uint64_t seed, int ions, int threads) {
  fs::create_directories(outdir);
  nvforge::io::Stopwatch watch;
  json report;
  report["figure"] = figure;
  report["seed"] = seed;
  bool ok = true;

  if (figure == "fig1b") {
    struct Row {
      const char* tag;
      nvforge::IonBeam beam;
      double bin;
    };
    const std::vector<Row> rows = {{"C12_12keV", nvforge::presets::c12_12kev(), 0.5},
                                   {"N15_12keV", nvforge::presets::n15_12kev(), 0.5},
                                   {"C12_50keV", nvforge::presets::c12_50kev(), 2.0},
                                   {"N15_50keV", nvforge::presets::n15_50kev(), 2.0}};
    std::map<std::string, InputSummary> summaries;
    std::map<std::string, double> kp_yields;
    for (const auto& row : rows) {
      ImplantArgs a;
      a.out = (fs::path(outdir) / (std::string(row.tag) + ".json")).string();
      a.ion = row.beam.ion.z == 6 ? "C12" : "N15";
      a.energy_kev = row.beam.energy_kev;
      a.ions = ions;
      a.seed = seed;
      a.threads = threads;
      a.bin_width_nm = row.bin;
      a.mode = "cascade";
      nvforge::io::write_json(a.out, run_implant_to_json(a));
      summaries[row.tag] = summarize_implant_file(a.out);
      a.mode = "kp";
      a.out = (fs::path(outdir) / (std::string(row.tag) + "_kp.json")).string();
      const json kp = run_implant_to_json(a);
      nvforge::io::write_json(a.out, kp);
      kp_yields[row.tag] = kp.at("vacancies_per_ion").get<double>();
    }
    const json targets{{"C12_12keV", {{"ion_peak_nm", 20.4}, {"vac_peak_nm", 15.3}, {"kp_yield", 68.0}}},
                       {"N15_12keV", {{"kp_yield", 74.0}}},
                       {"C12_50keV", {{"ion_peak_nm", 79.9}, {"vac_peak_nm", 64.6}, {"kp_yield", 151.0}}},
                       {"N15_50keV", {{"kp_yield", 175.0}}}};
    json rows_out = json::object();
    for (const auto& [tag, s] : summaries) {
      json r = s.detail;
      r["kp_vacancies_per_ion"] = kp_yields[tag];
      if (targets.contains(tag)) {
        for (auto it = targets.at(tag).begin(); it != targets.at(tag).end(); ++it) {
          const double target = it.value().get<double>();
          double value = 0.0;
          if (it.key() == "ion_peak_nm") value = s.ion.peak_depth_nm;
          if (it.key() == "vac_peak_nm") value = s.vac.peak_depth_nm;
          if (it.key() == "kp_yield") value = kp_yields[tag];
          const bool pass = approx_within(value, target, 0.30);
          r["check_" + it.key()] =
              json{{"value", value}, {"reference", target}, {"within_30pct", pass}};
          ok = ok && pass;
        }
      }
      rows_out[tag] = r;
    }
    const auto d12 = nvforge::damage::depth_delta(summaries["N15_12keV"].ion,
                                                  summaries["C12_12keV"].ion);
    const auto d12v = nvforge::damage::depth_delta(summaries["N15_12keV"].vac,
                                                   summaries["C12_12keV"].vac);
    const auto d50 = nvforge::damage::depth_delta(summaries["N15_50keV"].ion,
                                                  summaries["C12_50keV"].ion);
    const auto d50v = nvforge::damage::depth_delta(summaries["N15_50keV"].vac,
                                                   summaries["C12_50keV"].vac);
    report["species_difference"] =
        json{{"ion_relative_12keV", d12.relative},
             {"vac_relative_12keV", d12v.relative},
             {"ion_relative_50keV", d50.relative},
             {"vac_relative_50keV", d50v.relative},
             {"yield_ratio_12keV", kp_yields["C12_12keV"] / kp_yields["N15_12keV"]},
             {"yield_ratio_50keV", kp_yields["C12_50keV"] / kp_yields["N15_50keV"]}};
    report["runs"] = rows_out;
  } else if (figure == "fig3a") {
    const double d_ref = 5.4;
    auto spec = nvforge::etalon::synthesize_psb_spectrum(d_ref, 2.41, 0.05, seed);
    std::ostringstream csv;
    csv << "wavelength_nm,intensity\n";
    for (std::size_t i = 0; i < spec.wavelength_nm.size(); ++i)
      csv << spec.wavelength_nm[i] << "," << spec.intensity[i] << "\n";
    nvforge::io::write_text((fs::path(outdir) / "psb_spectrum.csv").string(), csv.str());
    const auto fit = nvforge::etalon::fit_thickness(spec, 2.41, 1.0, 10.0);
    const bool pass = std::abs(fit.thickness_um - d_ref) <= 0.1;
    report["thickness_um"] = fit.thickness_um;
    report["uncertainty_um"] = fit.uncertainty_um;
    report["reference_um"] = d_ref;
    report["within_0p1um"] = pass;
    ok = pass;
  } else if (figure == "fig3b") {
    nvforge::ple::EmitterModel em;
    em.gamma_h_mhz = 13.0;
    em.jump_sigma_mhz = 60.0;
    em.saturation = 0.5;
    em.ionization_prob = 0.01;
    em.repump_recovery_prob = 0.98;
    em.background_rate_cps = 500.0;
    nvforge::ple::PleScanConfig sc;
    sc.detuning_min_mhz = -450.0;
    sc.detuning_max_mhz = 450.0;
    sc.detuning_step_mhz = 10.0;
    const auto scan = nvforge::ple::simulate_ple_scan(em, sc, seed, threads);
    nvforge::io::RunManifest manifest;
    manifest.subcommand = "reproduce fig3b";
    manifest.seed = seed;
    manifest.config_hash = nvforge::io::fnv1a_hex("fig3b");
    write_scan_csv((fs::path(outdir) / "ple_scan.csv").string(), manifest, scan);
    const auto fit = nvforge::ple::fit_line_gaussian(scan);
    const double expected = nvforge::ple::voigt_fwhm_oracle(
        nvforge::ple::power_broadened_width(em.gamma_h_mhz, em.saturation),
        nvforge::ple::LineFit::kFwhmPerSigma * em.jump_sigma_mhz);
    const bool pass = approx_within(fit.fwhm_mhz, expected, 0.10);
    report["fitted_fwhm_mhz"] = fit.fwhm_mhz;
    report["voigt_oracle_mhz"] = expected;
    report["within_10pct"] = pass;
    ok = pass;
  } else if (figure == "fig4") {
    const json ref = reference_stats();
    nvforge::io::write_json((fs::path(outdir) / "reference_stats.json").string(), ref);
    const auto samples = synthesize_population(ref, seed, 1000);
    std::ostringstream csv;
    csv << "fwhm_mhz,thickness_um,sample,region\n";
    for (const auto& s : samples)
      csv << s.fwhm_mhz << "," << s.thickness_um << "," << s.sample_label << ","
          << s.region_label << "\n";
    nvforge::io::write_text((fs::path(outdir) / "linewidths.csv").string(), csv.str());
    const double threshold = ref.at("narrow_threshold_mhz").get<double>();
    json payload = stats_payload(samples, threshold);
    json checks = json::object();
    for (const auto& [label, spec] : ref.at("samples").items()) {
      const double median = payload.at("by_sample").at(label).at("lognormal").at("median_mhz").get<double>();
      const double target = spec.at("median_mhz").get<double>();
      checks[label] = json{{"median_mhz", median},
                           {"reference_mhz", target},
                           {"within_10pct", approx_within(median, target, 0.10)}};
      ok = ok && approx_within(median, target, 0.10);
    }
    std::vector<double> ab;
    for (const auto& s : samples)
      if (s.sample_label == "A" || s.sample_label == "B") ab.push_back(s.fwhm_mhz);
    const double frac_ab = nvforge::stats::fraction_below(ab, threshold);
    const double ref_ab = ref.at("fraction_below").at("AB").get<double>();
    checks["fraction_below_AB"] = json{{"value", frac_ab},
                                       {"reference", ref_ab},
                                       {"within_0p05", std::abs(frac_ab - ref_ab) <= 0.05}};
    ok = ok && std::abs(frac_ab - ref_ab) <= 0.05;
    report["stats"] = payload;
    report["checks"] = checks;
    nvforge::io::write_json((fs::path(outdir) / "stats.json").string(), payload);
  } else if (figure == "fig5") {
    const json ref = reference_stats();
    const auto samples = synthesize_population(ref, seed, 1000);
    const auto table = nvforge::stats::median_by_thickness(samples);
    json rows = json::array();
    for (const auto& row : table.rows)
      rows.push_back(json{{"region", row.region},
                          {"thickness_um", row.thickness_um},
                          {"median_mhz", row.fit.median_mhz},
                          {"geometric_std", row.fit.geometric_std},
                          {"n", row.fit.n}});
    // the A/B rows share one generator; their geometric-std intervals must overlap
    double lo_max = 0.0, hi_min = 1e30;
    for (const auto& row : table.rows) {
      if (row.region.front() == 'C') continue;
      lo_max = std::max(lo_max, row.fit.median_mhz / row.fit.geometric_std);
      hi_min = std::min(hi_min, row.fit.median_mhz * row.fit.geometric_std);
    }
    const bool overlap = lo_max < hi_min;
    report["rows"] = rows;
    report["thin_structure_intervals_overlap"] = overlap;
    ok = overlap;
    nvforge::io::write_json((fs::path(outdir) / "median_by_thickness.json").string(), rows);
  } else if (figure == "threshold") {
    const double max_w = nvforge::hom::max_linewidth_for_visibility(12.0, 300.0, 0.9);
    nvforge::hom::PhotonSource src;
    src.lifetime_ns = 12.0;
    src.measured_fwhm_mhz = 150.0;
    const double v150 = nvforge::hom::hom_visibility(src, {300.0});
    const bool pass = max_w >= 120.0 && max_w <= 180.0;
    report["max_fwhm_mhz"] = max_w;
    report["visibility_at_150mhz"] = v150;
    report["within_120_180"] = pass;
    ok = pass;
  } else {
    std::cerr << "unknown figure id: " << figure << "\n";
    return 2;
  }

  report["ok"] = ok;
  nvforge::io::RunManifest manifest;
  manifest.subcommand = "reproduce " + figure;
  manifest.seed = seed;
  manifest.config_hash = nvforge::io::fnv1a_hex(figure + "|" + std::to_string(ions));
  manifest.wall_time_s = watch.seconds();
  report["meta"] = manifest.to_json();
  const std::string report_path = (fs::path(outdir) / "report.json").string();
  nvforge::io::write_json(report_path, report);
  std::cout << "reproduce " << figure << ": " << (ok ? "PASS" : "FAIL")
            << " (report: " << report_path << ")\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carbon-implantation NV toolkit"};
  app.set_version_flag("--version", nvforge::kVersion);
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = auto)")
      ->envname("NVFORGE_THREADS");

  // implant
  ImplantArgs implant;
  auto* cmd_implant = app.add_subcommand("implant", "run an implantation batch");
  cmd_implant->add_option("--config", implant.config_path, "config file ([beam]/[target] sections)");
  cmd_implant->add_option("--ions", implant.ions, "number of ions")->check(CLI::PositiveNumber);
  cmd_implant->add_option("--mode", implant.mode, "damage mode: cascade | kp")
      ->check(CLI::IsMember({"cascade", "kp"}));
  cmd_implant->add_option("--seed", implant.seed, "random seed");
  cmd_implant->add_option("--out", implant.out, "output JSON ('-' = stdout)");
  cmd_implant->add_option("--slab-nm", implant.slab_nm, "slab thickness in nm");
  cmd_implant->add_option("--bin-width", implant.bin_width_nm, "histogram bin width in nm");
  cmd_implant->add_option("--ion", implant.ion, "beam ion (C12 | N15), overrides config");
  cmd_implant->add_option("--energy-kev", implant.energy_kev, "beam energy, overrides config");
  cmd_implant->add_option("--fluence", implant.fluence, "fluence per cm^2, overrides config");
  cmd_implant->add_option("--tilt-deg", implant.tilt_deg, "tilt from normal, overrides config");

  // analyze
  std::string analyze_in, analyze_compare, analyze_out = "summary.json";
  auto* cmd_analyze = app.add_subcommand("analyze", "summarize implantation results");
  cmd_analyze->add_option("--in", analyze_in, "implant JSON")->required();
  cmd_analyze->add_option("--compare", analyze_compare, "reference implant JSON (the N15 side)");
  cmd_analyze->add_option("--out", analyze_out, "output JSON");

  // etalon
  std::string etalon_in, etalon_out = "fit.json";
  double etalon_n = 2.41, etalon_dmin = 1.0, etalon_dmax = 10.0;
  auto* cmd_etalon = app.add_subcommand("etalon", "fit slab thickness from a spectrum");
  cmd_etalon->add_option("--in", etalon_in, "spectrum CSV (wavelength_nm,intensity)")->required();
  cmd_etalon->add_option("--n", etalon_n, "refractive index");
  cmd_etalon->add_option("--dmin", etalon_dmin, "minimum thickness, um");
  cmd_etalon->add_option("--dmax", etalon_dmax, "maximum thickness, um");
  cmd_etalon->add_option("--out", etalon_out, "output JSON");

  // ple
  std::string ple_emitter, ple_scan_cfg, ple_out = "scan.csv";
  std::uint64_t ple_seed = 42;
  auto* cmd_ple = app.add_subcommand("ple", "simulate a pulsed PLE scan");
  cmd_ple->add_option("--emitter", ple_emitter, "emitter config ([emitter] section)");
  cmd_ple->add_option("--scan", ple_scan_cfg, "scan config ([scan] section)");
  cmd_ple->add_option("--seed", ple_seed, "random seed");
  cmd_ple->add_option("--out", ple_out, "output CSV (detuning_MHz,counts)");

  // ple-fit
  std::string plefit_in, plefit_out = "fit.json";
  auto* cmd_plefit = app.add_subcommand("ple-fit", "Gaussian-fit a PLE scan");
  cmd_plefit->add_option("--in", plefit_in, "scan CSV")->required();
  cmd_plefit->add_option("--out", plefit_out, "output JSON");

  // stats
  std::string stats_in, stats_out = "stats.json";
  double stats_threshold = 150.0;
  auto* cmd_stats = app.add_subcommand("stats", "population statistics over linewidths");
  cmd_stats->add_option("--in", stats_in, "CSV: fwhm_mhz,thickness_um,sample,region")->required();
  cmd_stats->add_option("--threshold", stats_threshold, "narrow-line threshold, MHz");
  cmd_stats->add_option("--out", stats_out, "output JSON");

  // hom
  double hom_fwhm = 150.0, hom_t1 = 12.0, hom_window = 300.0, hom_target_v = 0.9;
  bool hom_invert = false;
  std::string hom_out = "-";
  auto* cmd_hom = app.add_subcommand("hom", "two-photon interference visibility");
  cmd_hom->add_option("--fwhm-mhz", hom_fwhm, "measured linewidth");
  cmd_hom->add_option("--t1-ns", hom_t1, "excited-state lifetime");
  cmd_hom->add_option("--window-ps", hom_window, "coincidence window");
  cmd_hom->add_flag("--invert", hom_invert, "solve for the max linewidth instead");
  cmd_hom->add_option("--target-v", hom_target_v, "visibility target for --invert");
  cmd_hom->add_option("--out", hom_out, "output JSON ('-' = stdout)");

  // bk-gain
  double bk_bare = 0.03, bk_enhanced = 0.3;
  std::string bk_out = "-";
  auto* cmd_bk = app.add_subcommand("bk-gain", "entanglement-rate gain from ZPL enhancement");
  cmd_bk->add_option("--bare", bk_bare, "bare ZPL photon fraction")->required();
  cmd_bk->add_option("--enhanced", bk_enhanced, "enhanced ZPL photon fraction")->required();
  cmd_bk->add_option("--out", bk_out, "output JSON ('-' = stdout)");

  // reproduce
  std::string repro_figure, repro_outdir;
  std::uint64_t repro_seed = 42;
  int repro_ions = 10000;
  auto* cmd_repro = app.add_subcommand("reproduce", "run a pinned end-to-end recipe");
  cmd_repro->add_option("figure", repro_figure, "fig1b | fig3a | fig3b | fig4 | fig5 | threshold")
      ->required()
      ->check(CLI::IsMember({"fig1b", "fig3a", "fig3b", "fig4", "fig5", "threshold"}));
  cmd_repro->add_option("--outdir", repro_outdir, "output directory");
  cmd_repro->add_option("--seed", repro_seed, "random seed");
  cmd_repro->add_option("--ions", repro_ions, "ions per implantation run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(cmd_implant)) {
      implant.threads = threads;
      nvforge::io::write_json(implant.out, run_implant_to_json(implant));
      return 0;
    }
    if (app.got_subcommand(cmd_analyze)) {
      nvforge::io::Stopwatch watch;
      const auto main_side = summarize_implant_file(analyze_in);
      json out{{"in", main_side.detail}};
      if (!analyze_compare.empty()) {
        const auto ref_side = summarize_implant_file(analyze_compare);
        // incompatible inputs are a data error (exit 1), not a usage error
        const auto delta_or_throw = [](const nvforge::damage::DepthSummary& a,
                                       const nvforge::damage::DepthSummary& b) {
          try {
            return nvforge::damage::depth_delta(a, b);
          } catch (const std::invalid_argument& e) {
            throw std::runtime_error(e.what());
          }
        };
        const auto ion_delta = delta_or_throw(ref_side.ion, main_side.ion);
        const auto vac_delta = delta_or_throw(ref_side.vac, main_side.vac);
        out["compare"] = ref_side.detail;
        out["delta"] = json{
            {"ion_delta_nm", ion_delta.delta_nm},
            {"ion_relative", ion_delta.relative},
            {"vac_delta_nm", vac_delta.delta_nm},
            {"vac_relative", vac_delta.relative},
            {"yield_ratio", main_side.vac.vacancies_per_ion / ref_side.vac.vacancies_per_ion}};
      }
      nvforge::io::RunManifest manifest;
      manifest.subcommand = "analyze";
      manifest.config_hash = nvforge::io::fnv1a_hex(analyze_in + "|" + analyze_compare);
      manifest.wall_time_s = watch.seconds();
      out["meta"] = manifest.to_json();
      nvforge::io::write_json(analyze_out, out);
      return 0;
    }
    if (app.got_subcommand(cmd_etalon)) {
      nvforge::io::Stopwatch watch;
      const auto rows = nvforge::io::read_csv(etalon_in, 2);
      nvforge::etalon::Spectrum spec;
      for (const auto& r : rows) {
        spec.wavelength_nm.push_back(r[0]);
        spec.intensity.push_back(r[1]);
      }
      const auto fit = nvforge::etalon::fit_thickness(spec, etalon_n, etalon_dmin, etalon_dmax);
      nvforge::io::RunManifest manifest;
      manifest.subcommand = "etalon";
      manifest.config_hash = nvforge::io::fnv1a_hex(etalon_in);
      manifest.wall_time_s = watch.seconds();
      nvforge::io::write_json(etalon_out,
                              json{{"meta", manifest.to_json()},
                                   {"thickness_um", fit.thickness_um},
                                   {"uncertainty_um", fit.uncertainty_um},
                                   {"power_ratio", fit.power_ratio},
                                   {"refractive_index", etalon_n}});
      return 0;
    }
    if (app.got_subcommand(cmd_ple)) {
      nvforge::io::Stopwatch watch;
      nvforge::cfg::Config emitter_cfg = ple_emitter.empty()
                                             ? nvforge::cfg::Config()
                                             : nvforge::cfg::Config::load(ple_emitter);
      nvforge::cfg::Config scan_cfg = ple_scan_cfg.empty()
                                          ? emitter_cfg
                                          : nvforge::cfg::Config::load(ple_scan_cfg);
      const auto emitter = nvforge::cfg::emitter_from(emitter_cfg);
      const auto cfg = nvforge::cfg::scan_from(scan_cfg);
      const auto scan = nvforge::ple::simulate_ple_scan(emitter, cfg, ple_seed, threads);
      nvforge::io::RunManifest manifest;
      manifest.subcommand = "ple";
      manifest.seed = ple_seed;
      manifest.config_hash =
          nvforge::io::fnv1a_hex(slurp_if_exists(ple_emitter) + "|" + slurp_if_exists(ple_scan_cfg));
      manifest.wall_time_s = watch.seconds();
      write_scan_csv(ple_out, manifest, scan);
      return 0;
    }
    if (app.got_subcommand(cmd_plefit)) {
      nvforge::io::Stopwatch watch;
      const auto scan = read_scan_csv(plefit_in);
      const auto fit = nvforge::ple::fit_line_gaussian(scan);
      nvforge::io::RunManifest manifest;
      manifest.subcommand = "ple-fit";
      manifest.config_hash = nvforge::io::fnv1a_hex(plefit_in);
      manifest.wall_time_s = watch.seconds();
      nvforge::io::write_json(plefit_out, json{{"meta", manifest.to_json()},
                                               {"fwhm_mhz", fit.fwhm_mhz},
                                               {"center_mhz", fit.center_mhz},
                                               {"amplitude", fit.amplitude},
                                               {"baseline", fit.baseline},
                                               {"unresolved", fit.unresolved}});
      return 0;
    }
    if (app.got_subcommand(cmd_stats)) {
      nvforge::io::Stopwatch watch;
      const auto samples = nvforge::io::read_linewidth_csv(stats_in);
      if (samples.empty()) throw std::runtime_error("stats: no samples in " + stats_in);
      json payload = stats_payload(samples, stats_threshold);
      nvforge::io::RunManifest manifest;
      manifest.subcommand = "stats";
      manifest.config_hash = nvforge::io::fnv1a_hex(stats_in);
      manifest.wall_time_s = watch.seconds();
      payload["meta"] = manifest.to_json();
      nvforge::io::write_json(stats_out, payload);
      return 0;
    }
    if (app.got_subcommand(cmd_hom)) {
      nvforge::io::Stopwatch watch;
      nvforge::io::RunManifest manifest;
      manifest.subcommand = "hom";
      manifest.config_hash = nvforge::io::fnv1a_hex("hom");
      json out{{"t1_ns", hom_t1}, {"window_ps", hom_window}};
      if (hom_invert) {
        out["target_visibility"] = hom_target_v;
        out["max_fwhm_mhz"] =
            nvforge::hom::max_linewidth_for_visibility(hom_t1, hom_window, hom_target_v);
      } else {
        nvforge::hom::PhotonSource src;
        src.lifetime_ns = hom_t1;
        src.measured_fwhm_mhz = hom_fwhm;
        out["fwhm_mhz"] = hom_fwhm;
        out["visibility"] = nvforge::hom::hom_visibility(src, {hom_window});
      }
      manifest.wall_time_s = watch.seconds();
      out["meta"] = manifest.to_json();
      nvforge::io::write_json(hom_out, out);
      return 0;
    }
    if (app.got_subcommand(cmd_bk)) {
      nvforge::io::RunManifest manifest;
      manifest.subcommand = "bk-gain";
      manifest.config_hash = nvforge::io::fnv1a_hex("bk-gain");
      nvforge::io::write_json(bk_out,
                              json{{"meta", manifest.to_json()},
                                   {"bare", bk_bare},
                                   {"enhanced", bk_enhanced},
                                   {"gain", nvforge::hom::barrett_kok_gain(bk_bare, bk_enhanced)}});
      return 0;
    }
    if (app.got_subcommand(cmd_repro)) {
      if (repro_outdir.empty()) repro_outdir = "reproduce_" + repro_figure;
      return run_reproduce(repro_figure, repro_outdir, repro_seed, repro_ions, threads);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
