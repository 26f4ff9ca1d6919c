#ifndef SPDCLAB_COMMANDS_HPP
#define SPDCLAB_COMMANDS_HPP

// Command implementations. Each writes its files under `out_dir` and
// nowhere else; every file starts with a header naming the tool version and
// the config hash.

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "spdclab/cavity.hpp"
#include "spdclab/coherence.hpp"
#include "spdclab/config.hpp"
#include "spdclab/io.hpp"
#include "spdclab/modematch.hpp"
#include "spdclab/phasematch.hpp"
#include "spdclab/photostat.hpp"
#include "spdclab/qdscatter.hpp"
#include "spdclab/temporal.hpp"

namespace spdclab {

struct RunContext {
  SimulationConfig cfg;
  std::filesystem::path out_dir;
  std::size_t threads = 1;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitInfeasible = 4,
};

namespace detail {

/// Runs `fn`, tagging any library error that lacks one with `path`.
template <class Fn>
auto at_path(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (Error& e) {
    if (e.param_path().empty()) e.set_param_path(path);
    throw;
  }
}

inline std::vector<std::string> header(const RunContext& ctx, const std::string& command) {
  return {"spdclab " + std::string(kVersion) + " config_hash=" + config_hash_hex(ctx.cfg),
          "command=" + command + " seed=" + std::to_string(ctx.cfg.run.seed)};
}

}  // namespace detail

inline CrystalSpec build_crystal(const SimulationConfig& cfg) {
  const std::string path = detail::at_path("crystal.dispersion_file", [&] { return resolve_data_file(cfg); });
  CrystalSpec c;
  c.material = detail::at_path("crystal.dispersion_file", [&] { return load_dispersion(path); });
  c.length_mm = cfg.crystal.length_mm;
  c.poling_period_um = cfg.crystal.poling_period_um;
  c.temperature_c = cfg.crystal.temperature_c;
  c.phase_offset_rad_per_um = cfg.crystal.phase_offset_rad_per_um;
  c.pump_axis = cfg.crystal.pump_axis;
  c.signal_axis = cfg.crystal.signal_axis;
  c.idler_axis = cfg.crystal.idler_axis;
  detail::at_path("crystal", [&] { c.validate(); });
  return c;
}

inline CavitySpec build_cavity(const SimulationConfig& cfg, const CrystalSpec& crystal) {
  CavitySpec cav = make_source_cavity(crystal, cfg.cavity.compensator_length_mm, cfg.cavity.air_gap_mm);
  cav.mirror_reflectivity_high = cfg.cavity.mirror_reflectivity_high;
  cav.mirror_reflectivity_out = cfg.cavity.mirror_reflectivity_out;
  cav.transverse_splitting_ghz = cfg.cavity.transverse_splitting_ghz;
  cav.transverse_mode_weight = cfg.cavity.transverse_mode_weight;
  cav.center_offset_ghz = cfg.cavity.center_offset_ghz;
  detail::at_path("cavity", [&] { cav.validate(); });
  return cav;
}

inline ModeComb build_comb(const SimulationConfig& cfg, const CrystalSpec& crystal) {
  const CavitySpec cav = build_cavity(cfg, crystal);
  return detail::at_path("cavity", [&] {
    return mode_comb(cav, cfg.pump.degenerate_wavelength_nm(), crystal.temperature_c);
  });
}

/// Gain x comb (x filter) on a symmetric grid.
inline SpectralDensity build_source_spectrum(const SimulationConfig& cfg, const CrystalSpec& crystal,
                                             const ModeComb& comb, double half_span_ghz, double step_ghz,
                                             bool use_filter, const std::string& grid_path) {
  const auto grid = detail::at_path(grid_path, [&] { return symmetric_grid(half_span_ghz, step_ghz); });
  const auto gain = detail::at_path("crystal", [&] { return gain_spectrum(crystal, cfg.pump, grid, cfg.gain.model); });
  std::optional<EtalonSpec> filter;
  if (use_filter && cfg.filter.enabled) filter = cfg.filter.etalon;
  return detail::at_path(grid_path, [&] { return output_spectrum(gain, comb, cfg.pump, filter); });
}

inline int cmd_tuning_curve(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const CrystalSpec crystal = build_crystal(cfg);
  const auto tc = detail::at_path("tuning", [&] {
    return tuning_curve(crystal, cfg.pump, cfg.tuning.temperature, cfg.tuning.wavelength, ctx.threads);
  });
  CsvWriter csv(ctx.out_dir / "tuning_curve.csv", detail::header(ctx, "tuning-curve"),
                {"temperature_C", "wavelength_nm", "signal", "idler"});
  for (std::size_t r = 0; r < tc.rows(); ++r) {
    for (std::size_t c = 0; c < tc.cols(); ++c) {
      csv.row({tc.temperatures_c[r], tc.wavelengths_nm[c], tc.signal_at(r, c), tc.idler_at(r, c)});
    }
  }
  const double t_deg = detail::at_path("crystal.phase_offset_rad_per_um", [&] {
    return degeneracy_temperature(crystal, cfg.pump, cfg.tuning.temperature.min, cfg.tuning.temperature.max);
  });
  const auto cross = detail::at_path("tuning", [&] { return branch_crossing(tc); });
  const double band = detail::at_path("tuning", [&] { return degeneracy_band(tc); });
  KeyValueWriter kv(ctx.out_dir / "tuning_summary.txt", detail::header(ctx, "tuning-curve"));
  kv.put("degeneracy_temperature_C", t_deg);
  kv.put("degenerate_wavelength_nm", cfg.pump.degenerate_wavelength_nm());
  kv.put("crossing_temperature_C", cross.temperature_c);
  kv.put("crossing_wavelength_nm", cross.wavelength_nm);
  kv.put("degeneracy_band_C", band);
  return kExitOk;
}

inline int cmd_gain(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const CrystalSpec crystal = build_crystal(cfg);
  const auto grid = detail::at_path("gain", [&] { return symmetric_grid(cfg.gain.half_span_ghz, cfg.gain.step_ghz); });
  const auto gain = detail::at_path("crystal", [&] { return gain_spectrum(crystal, cfg.pump, grid, cfg.gain.model); });
  const double nu_d = frequency_ghz(cfg.pump.degenerate_wavelength_nm());
  CsvWriter csv(ctx.out_dir / "gain.csv", detail::header(ctx, "gain"), {"detuning_GHz", "wavelength_nm", "gain"});
  for (std::size_t i = 0; i < gain.size(); ++i) {
    csv.row({gain.detuning_ghz[i], wavelength_nm(nu_d + gain.detuning_ghz[i]), gain.intensity[i]});
  }
  const double ld = cfg.pump.degenerate_wavelength_nm();
  KeyValueWriter kv(ctx.out_dir / "gain_summary.txt", detail::header(ctx, "gain"));
  kv.put("degenerate_wavelength_nm", ld);
  kv.put("delta_k0_rad_per_um", delta_k0_degenerate(crystal, cfg.pump));
  kv.put("group_index_mismatch", group_index_mismatch(crystal, ld));
  kv.put("fwhm_closed_form_GHz", detail::at_path("crystal", [&] { return fwhm_bandwidth(crystal, ld); }));
  kv.put("fwhm_numeric_GHz", detail::at_path("gain", [&] { return numeric_fwhm(gain.detuning_ghz, gain.intensity); }));
  kv.put("pump_spectral_fwhm_GHz", cfg.pump.spectral_fwhm_ghz());
  return kExitOk;
}

inline int cmd_spectrum(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const CrystalSpec crystal = build_crystal(cfg);
  const ModeComb comb = build_comb(cfg, crystal);
  const auto grid =
      detail::at_path("spectrum", [&] { return symmetric_grid(cfg.spectrum.half_span_ghz, cfg.spectrum.step_ghz); });
  const auto gain = detail::at_path("crystal", [&] { return gain_spectrum(crystal, cfg.pump, grid, cfg.gain.model); });
  std::optional<EtalonSpec> filter;
  if (cfg.filter.enabled) filter = cfg.filter.etalon;
  const auto out = detail::at_path("spectrum", [&] { return output_spectrum(gain, comb, cfg.pump, filter); });
  const auto norm = out.normalized_to_peak();

  CsvWriter csv(ctx.out_dir / "spectrum.csv", detail::header(ctx, "spectrum"),
                {"detuning_GHz", "gain", "comb", "filter", "intensity"});
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out.detuning_ghz[i];
    csv.row({d, gain.intensity[i], comb_transmission(comb, d), filter ? etalon_transmission(*filter, d) : 1.0,
             norm.intensity[i]});
  }
  std::vector<double> peaks, heights;
  for (std::size_t i : peaks_above(norm, 0.1)) {
    peaks.push_back(norm.detuning_ghz[i]);
    heights.push_back(norm.intensity[i]);
  }
  KeyValueWriter kv(ctx.out_dir / "spectrum_summary.txt", detail::header(ctx, "spectrum"));
  kv.put("fsr_GHz", comb.fsr_ghz);
  kv.put("round_trip_ps", 1e3 / comb.fsr_ghz);
  kv.put("finesse", comb.finesse());
  kv.put("mode_linewidth_GHz", comb.mode_linewidth_fwhm_ghz);
  kv.put("signal_idler_fsr_mismatch_GHz", comb.signal_idler_fsr_mismatch_ghz);
  kv.put("peaks_GHz", peaks);
  kv.put("peak_heights", heights);
  return kExitOk;
}

inline int cmd_g1(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& co = cfg.coherence;
  const CrystalSpec crystal = build_crystal(cfg);
  const ModeComb comb = build_comb(cfg, crystal);
  const auto spec = build_source_spectrum(cfg, crystal, comb, co.half_span_ghz, co.step_ghz, false, "coherence");
  const auto delays = detail::at_path("coherence", [&] {
    return two_resolution_delays(co.max_delay_ps, co.fine_limit_ps, co.fine_step_ps, co.coarse_step_ps);
  });
  const auto trace = g1_from_spectrum(spec, delays, ctx.threads);
  CsvWriter csv(ctx.out_dir / "g1.csv", detail::header(ctx, "g1"), {"delay_ps", "visibility"});
  for (std::size_t i = 0; i < trace.size(); ++i) csv.row({trace.delays_ps[i], trace.visibility[i]});

  const double period = 1e3 / comb.fsr_ghz;
  const auto fit = detail::at_path("coherence", [&] { return fit_revivals(trace, period); });
  const double central = detail::at_path("coherence.fine_step_ps", [&] { return central_peak_width(trace); });
  KeyValueWriter kv(ctx.out_dir / "g1_summary.txt", detail::header(ctx, "g1"));
  kv.put("revival_period_ps", period);
  kv.put("mean_revival_spacing_ps", fit.mean_spacing_ps);
  kv.put("revival_peaks", static_cast<std::uint64_t>(fit.peak_delays_ps.size()));
  kv.put("coherence_time_ps", fit.coherence_time_ps);
  kv.put("coherence_time_from_linewidth_ps", 1e3 / (kPi * comb.mode_linewidth_fwhm_ghz));
  kv.put("central_peak_lifetime_ps", central);
  kv.put("peak_delays_ps", fit.peak_delays_ps);
  return kExitOk;
}

inline int cmd_wavepacket(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& w = cfg.wavepacket;
  const auto grid = detail::at_path("wavepacket", [&] { return uniform_grid(0.0, w.t_max_ps, w.bin_ps); });
  const auto prof = detail::at_path("wavepacket", [&] { return synth_wavepacket(w.params, grid, cfg.run.seed); });
  CsvWriter csv(ctx.out_dir / "wavepacket.csv", detail::header(ctx, "wavepacket"), {"time_ps", "expected", "counts"});
  for (std::size_t i = 0; i < prof.size(); ++i) {
    csv.row({prof.times_ps[i], prof.intensity[i], static_cast<double>((*prof.counts)[i])});
  }
  const auto fit = detail::at_path("wavepacket", [&] {
    return w.fit_beat ? fit_exp_beat(prof) : fit_exponential(prof);
  });
  KeyValueWriter kv(ctx.out_dir / "wavepacket_fit.txt", detail::header(ctx, "wavepacket"));
  kv.put("lifetime_ps", fit.lifetime_ps);
  kv.put("lifetime_stderr_ps", fit.lifetime_stderr_ps);
  kv.put("amplitude", fit.amplitude);
  kv.put("beat_identified", fit.beat_identified ? "true" : "false");
  if (fit.beat_identified) {
    kv.put("beat_frequency_GHz", *fit.beat_frequency_ghz);
    kv.put("beat_frequency_stderr_GHz", *fit.beat_frequency_stderr_ghz);
    kv.put("beat_visibility", *fit.beat_visibility);
    kv.put("phase_rad", *fit.phase_rad);
  }
  kv.put("reduced_chi2", fit.reduced_chi2);
  kv.put("natural_linewidth_MHz", natural_linewidth_mhz(fit.lifetime_ps));
  return kExitOk;
}

inline int cmd_g3_sweep(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& model = cfg.source.model;
  const auto& det = cfg.detectors.set;
  const auto pts = detail::at_path("sweep", [&] {
    return g3_power_sweep(model, det, cfg.sweep.powers_mw, cfg.sweep.pulses_per_point, cfg.run.seed, ctx.threads);
  });
  CsvWriter csv(ctx.out_dir / "g3_sweep.csv", detail::header(ctx, "g3-sweep"),
                {"power_mW", "mu", "g3", "stderr", "g3_exact", "N1", "N12", "N13", "N123", "pulses"});
  for (const auto& p : pts) {
    const double exact = detail::at_path("sweep.m_cutoff", [&] {
      return g3_enumerate(model, p.power_mw, det, cfg.sweep.m_cutoff).g3();
    });
    const auto& c = p.counts;
    csv.row({p.power_mw, model.mean_pairs(p.power_mw), p.g3, p.stderr_g3, exact, static_cast<double>(c.n1),
             static_cast<double>(c.n12), static_cast<double>(c.n13), static_cast<double>(c.n123),
             static_cast<double>(c.pulses)});
  }
  return kExitOk;
}

inline int cmd_qd_scan(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const CrystalSpec crystal = build_crystal(cfg);
  const ModeComb comb = build_comb(cfg, crystal);
  const auto spec =
      build_source_spectrum(cfg, crystal, comb, cfg.spectrum.half_span_ghz, cfg.spectrum.step_ghz, true, "spectrum");
  const auto biases =
      detail::at_path("scan", [&] { return uniform_grid(cfg.scan.bias_min_v, cfg.scan.bias_max_v, cfg.scan.bias_step_v); });
  const auto scan = detail::at_path("scan", [&] {
    return scattering_scan(spec, cfg.qd, biases, cfg.scan.settings, cfg.run.seed, ctx.threads);
  });
  CsvWriter csv(ctx.out_dir / "qd_scan.csv", detail::header(ctx, "qd-scan"),
                {"bias_V", "detuning_GHz", "counts", "background", "expected"});
  std::uint64_t total_bg = 0;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    csv.row({scan.biases_v[i], scan.detuning_ghz[i], static_cast<double>(scan.counts[i]),
             static_cast<double>(scan.background[i]), scan.expected[i]});
    total_bg += static_cast<std::uint64_t>(scan.background[i]);
  }
  KeyValueWriter kv(ctx.out_dir / "qd_fit.txt", detail::header(ctx, "qd-scan"));
  kv.put("mean_background_counts", static_cast<double>(total_bg) / static_cast<double>(scan.size()));
  if (cfg.scan.settings.kappa == 0.0) {
    kv.put("fit", "skipped (kappa = 0, no scatterer)");
    return kExitOk;
  }
  const auto fit = detail::at_path("scan", [&] { return fit_double_peak(scan); });
  kv.put("separation_GHz", fit.separation_ghz);
  kv.put("separation_stderr_GHz", fit.separation_stderr_ghz);
  kv.put("centers_GHz", std::vector<double>{fit.centers_ghz[0], fit.centers_ghz[1]});
  kv.put("widths_fwhm_GHz", std::vector<double>{fit.widths_fwhm_ghz[0], fit.widths_fwhm_ghz[1]});
  kv.put("amplitude_ratio", fit.amplitude_ratio);
  kv.put("background_fit", fit.background);
  return kExitOk;
}

inline int cmd_match(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& m = cfg.match;
  const CrystalSpec crystal = build_crystal(cfg);
  const CavitySpec cav = build_cavity(cfg, crystal);
  const double ld = cfg.pump.degenerate_wavelength_nm();
  const double current = cavity_lifetime_ps(cav, ld, crystal.temperature_c);

  KeyValueWriter kv(ctx.out_dir / "match.txt", detail::header(ctx, "match"));
  OverlapReport rep = overlap_report(cfg.wavepacket.params.lifetime_ps, cfg.qd.lifetime_ps, m.mismatch_convention);
  if (m.include_beat) {
    WavepacketParams qd_photon{cfg.qd.lifetime_ps, std::nullopt, 0.0, 0.0, 1.0};
    rep.temporal_overlap = temporal_overlap_with_beat(cfg.wavepacket.params, qd_photon);
  }
  kv.put("lifetime_spdc_ps", rep.lifetime_spdc_ps);
  kv.put("lifetime_target_ps", rep.lifetime_target_ps);
  kv.put("temporal_overlap", rep.temporal_overlap);
  kv.put("lifetime_mismatch", rep.mismatch);
  kv.put("cavity_lifetime_ps", current);
  kv.put("target_lifetime_ps", m.target_lifetime_ps);
  try {
    const auto res = match_cavity_length(m.target_lifetime_ps, cav, ld, crystal.temperature_c,
                                         {m.gap_min_mm, m.gap_max_mm}, m.tolerance_mm);
    kv.put("feasible", "true");
    kv.put("air_gap_mm", res.air_gap_mm);
    kv.put("achieved_lifetime_ps", res.achieved_lifetime_ps);
    kv.put("overlap_after_match", temporal_overlap(res.achieved_lifetime_ps, m.target_lifetime_ps));
    CsvWriter trace(ctx.out_dir / "match_trace.csv", detail::header(ctx, "match"),
                    {"iteration", "gap_mm", "lifetime_ps"});
    for (const auto& s : res.trace) trace.row({static_cast<double>(s.iteration), s.x, s.value});
    return kExitOk;
  } catch (InfeasibleError& e) {
    kv.put("feasible", "false");
    kv.put("achievable_min_ps", e.achievable_min());
    kv.put("achievable_max_ps", e.achievable_max());
    if (e.param_path().empty()) e.set_param_path("match.target_lifetime_ps");
    throw;
  }
}

using CommandFn = std::function<int(const RunContext&)>;

inline const std::map<std::string, CommandFn>& commands() {
  static const std::map<std::string, CommandFn> table{
      {"tuning-curve", cmd_tuning_curve}, {"gain", cmd_gain},       {"spectrum", cmd_spectrum},
      {"g1", cmd_g1},                     {"wavepacket", cmd_wavepacket}, {"g3-sweep", cmd_g3_sweep},
      {"qd-scan", cmd_qd_scan},           {"match", cmd_match},
  };
  return table;
}

/// Exit status for an error raised while running a command.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InfeasibleError*>(&e)) return kExitInfeasible;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e)) return kExitConfig;
  if (dynamic_cast<const FitError*>(&e) || dynamic_cast<const RootNotFoundError*>(&e) ||
      dynamic_cast<const ResolutionError*>(&e) || dynamic_cast<const RangeError*>(&e) ||
      dynamic_cast<const InsufficientStatistics*>(&e)) {
    return kExitNumeric;
  }
  return kExitFailure;
}

}  // namespace spdclab

#endif  // SPDCLAB_COMMANDS_HPP
