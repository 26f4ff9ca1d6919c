#ifndef SPDCLAB_CONFIG_HPP
#define SPDCLAB_CONFIG_HPP

// Flat INI-style run configuration:
//
//   # comment
//   [section]
//   key = value
//
// Every key has a default; unknown sections and keys are errors. Parsing and
// validation collect every problem before failing.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spdclab/cavity.hpp"
#include "spdclab/core.hpp"
#include "spdclab/dispersion.hpp"
#include "spdclab/phasematch.hpp"
#include "spdclab/photostat.hpp"
#include "spdclab/qdscatter.hpp"
#include "spdclab/temporal.hpp"

namespace spdclab {

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid configuration:";
    for (const auto& m : p) s += "\n  " + m;
    return s;
  }
  std::vector<std::string> problems_;
};

struct RunSection {
  std::uint64_t seed = 20231;
};

struct CrystalSection {
  std::string dispersion_file = "ktp_kato_takaoka_2002.txt";
  double length_mm = 5.0;
  std::optional<double> poling_period_um = 33.25;
  double temperature_c = 27.0;
  // Calibrated so the degenerate phase matching falls at 27 C.
  double phase_offset_rad_per_um = 7.96495118352e-4;
  Axis pump_axis = Axis::y;
  Axis signal_axis = Axis::y;
  Axis idler_axis = Axis::z;
};

struct CavitySection {
  double mirror_reflectivity_high = 0.998;
  double mirror_reflectivity_out = 0.90;
  double compensator_length_mm = 2.0;
  // Calibrated so 1/FSR = 113.6 ps for the signal polarization.
  double air_gap_mm = 4.32463258759;
  double transverse_splitting_ghz = 2.8;
  double transverse_mode_weight = 0.5;
  double center_offset_ghz = 0.0;
};

struct FilterSection {
  bool enabled = true;
  EtalonSpec etalon;
};

struct TuningSection {
  AxisRange temperature{17.0, 37.0, 0.05};
  AxisRange wavelength{938.0, 946.0, 0.01};
};

struct GainSection {
  double half_span_ghz = 1500.0;
  double step_ghz = 0.5;
  GainModel model = GainModel::exact;
};

struct SpectrumSection {
  double half_span_ghz = 20.0;
  double step_ghz = 0.005;
};

struct CoherenceSection {
  double half_span_ghz = 3000.0;
  double step_ghz = 0.015;
  double max_delay_ps = 5000.0;
  double fine_limit_ps = 20.0;
  double fine_step_ps = 0.1;
  double coarse_step_ps = 1.0;
};

struct WavepacketSection {
  WavepacketParams params{932.0, 3.06, 0.3, 0.0, 400.0};
  double bin_ps = 8.0;
  double t_max_ps = 6000.0;
  bool fit_beat = true;
};

struct DetectorsSection {
  DetectorSet set{{0.5, 110.0, 3.0}, {0.5, 110.0, 3.0}, {0.5, 110.0, 3.0}, 0.5};
};

struct SourceSection {
  // Calibrated by exact enumeration so that g3(5 mW) = 0.071.
  SourceStatModel model{0.009939946942, PairDistribution::poissonian, 1, Emission::pairs};
};

struct SweepSection {
  std::vector<double> powers_mw{1, 2, 5, 10, 20, 30, 40, 50, 60, 65, 70, 80, 100};
  std::uint64_t pulses_per_point = 10000000;
  int m_cutoff = 60;
};

struct ScanSection {
  double bias_min_v = 0.0;
  double bias_max_v = 1.0;
  double bias_step_v = 0.005;
  ScanSettings settings;
};

struct MatchSection {
  double target_lifetime_ps = 751.0;
  double gap_min_mm = 0.0;
  double gap_max_mm = 30.0;
  double tolerance_mm = 1e-6;
  MismatchConvention mismatch_convention = MismatchConvention::reference;
  bool include_beat = false;
};

struct SimulationConfig {
  RunSection run;
  CrystalSection crystal;
  PumpSpec pump;
  CavitySection cavity;
  FilterSection filter;
  TuningSection tuning;
  GainSection gain;
  SpectrumSection spectrum;
  CoherenceSection coherence;
  WavepacketSection wavepacket;
  DetectorsSection detectors;
  SourceSection source;
  SweepSection sweep;
  QDSpec qd;
  ScanSection scan;
  MatchSection match;
  /// Directory relative paths in the file are resolved against (not serialized).
  std::string base_dir;
};

inline const std::vector<std::string>& required_sections() {
  static const std::vector<std::string> s{"run", "crystal", "pump", "cavity", "filter", "detectors", "source", "qd"};
  return s;
}

namespace detail {

inline std::string format_value(double v) {
  char buf[40];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int p = 1; p < 17; ++p) {
    char s[40];
    std::snprintf(s, sizeof s, "%.*g", p, v);
    if (std::strtod(s, nullptr) == v) return s;
  }
  return buf;
}
inline std::string format_value(int v) { return std::to_string(v); }
inline std::string format_value(std::uint64_t v) { return std::to_string(v); }
inline std::string format_value(bool v) { return v ? "true" : "false"; }
inline std::string format_value(const std::string& v) { return v; }
inline std::string format_value(const std::optional<double>& v) { return v ? format_value(*v) : "none"; }
inline std::string format_value(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_value(v[i]);
  return s + "]";
}
inline std::string format_value(Axis a) { return std::string(to_string(a)); }
inline std::string format_value(PairDistribution d) { return std::string(to_string(d)); }
inline std::string format_value(Emission e) { return e == Emission::pairs ? "pairs" : "coherent"; }
inline std::string format_value(LineShape l) { return l == LineShape::lorentzian ? "lorentzian" : "voigt"; }
inline std::string format_value(GainModel g) { return g == GainModel::exact ? "exact" : "linear"; }
inline std::string format_value(MismatchConvention m) {
  return m == MismatchConvention::reference ? "reference" : "mean";
}

inline void parse_value(std::string_view t, double& out, const std::string& where) { out = parse_number(t, where); }

inline void parse_value(std::string_view t, int& out, const std::string& where) {
  const std::string s = trim(t);
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw ArgumentError(where + ": expected an integer, got '" + s + "'");
  out = static_cast<int>(v);
}

inline void parse_value(std::string_view t, std::uint64_t& out, const std::string& where) {
  const std::string s = trim(t);
  char* end = nullptr;
  if (!s.empty() && s[0] == '-') throw ArgumentError(where + ": expected a non-negative integer, got '" + s + "'");
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') {
    // Allow 1e7-style counts when they are exact integers.
    const double d = parse_number(s, where);
    if (d < 0 || d != std::floor(d) || d > 1.8e19) throw ArgumentError(where + ": expected an integer, got '" + s + "'");
    out = static_cast<std::uint64_t>(d);
    return;
  }
  out = v;
}

inline void parse_value(std::string_view t, bool& out, const std::string& where) {
  const std::string s = trim(t);
  if (s == "true" || s == "yes" || s == "1") {
    out = true;
  } else if (s == "false" || s == "no" || s == "0") {
    out = false;
  } else {
    throw ArgumentError(where + ": expected true/false, got '" + s + "'");
  }
}

inline void parse_value(std::string_view t, std::string& out, const std::string& where) {
  out = trim(t);
  if (out.empty()) throw ArgumentError(where + ": empty value");
}

inline void parse_value(std::string_view t, std::optional<double>& out, const std::string& where) {
  const std::string s = trim(t);
  if (s == "none") {
    out.reset();
  } else {
    out = parse_number(s, where);
  }
}

inline void parse_value(std::string_view t, std::vector<double>& out, const std::string& where) {
  out = parse_number_list(t, where);
}

template <class E>
void parse_enum(std::string_view t, E& out, const std::string& where, std::initializer_list<std::pair<const char*, E>> opts) {
  const std::string s = trim(t);
  std::string names;
  for (const auto& [name, value] : opts) {
    if (s == name) {
      out = value;
      return;
    }
    names += (names.empty() ? "" : ", ") + std::string(name);
  }
  throw ArgumentError(where + ": unknown value '" + s + "' (expected one of " + names + ")");
}

inline void parse_value(std::string_view t, Axis& out, const std::string& where) {
  parse_enum(t, out, where, {{"x", Axis::x}, {"y", Axis::y}, {"z", Axis::z}});
}
inline void parse_value(std::string_view t, PairDistribution& out, const std::string& where) {
  parse_enum(t, out, where,
             {{"poissonian", PairDistribution::poissonian},
              {"thermal", PairDistribution::thermal},
              {"single_pair", PairDistribution::single_pair}});
}
inline void parse_value(std::string_view t, Emission& out, const std::string& where) {
  parse_enum(t, out, where, {{"pairs", Emission::pairs}, {"coherent", Emission::coherent}});
}
inline void parse_value(std::string_view t, LineShape& out, const std::string& where) {
  parse_enum(t, out, where, {{"lorentzian", LineShape::lorentzian}, {"voigt", LineShape::voigt}});
}
inline void parse_value(std::string_view t, GainModel& out, const std::string& where) {
  parse_enum(t, out, where, {{"exact", GainModel::exact}, {"linear", GainModel::linear}});
}
inline void parse_value(std::string_view t, MismatchConvention& out, const std::string& where) {
  parse_enum(t, out, where, {{"reference", MismatchConvention::reference}, {"mean", MismatchConvention::mean}});
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const SimulationConfig&)> get;
  std::function<void(SimulationConfig&, std::string_view, const std::string&)> set;
};

template <class Accessor>
Field make_field(const char* section, const char* key, Accessor acc) {
  return Field{section, key,
               [acc](const SimulationConfig& c) { return format_value(acc(const_cast<SimulationConfig&>(c))); },
               [acc](SimulationConfig& c, std::string_view v, const std::string& where) { parse_value(v, acc(c), where); }};
}

#define SPDCLAB_FIELD(sec, key, expr) make_field(sec, key, [](SimulationConfig& c) -> auto& { return c.expr; })

inline const std::vector<Field>& schema() {
  static const std::vector<Field> fields{
      SPDCLAB_FIELD("run", "seed", run.seed),

      SPDCLAB_FIELD("crystal", "dispersion_file", crystal.dispersion_file),
      SPDCLAB_FIELD("crystal", "length_mm", crystal.length_mm),
      SPDCLAB_FIELD("crystal", "poling_period_um", crystal.poling_period_um),
      SPDCLAB_FIELD("crystal", "temperature_c", crystal.temperature_c),
      SPDCLAB_FIELD("crystal", "phase_offset_rad_per_um", crystal.phase_offset_rad_per_um),
      SPDCLAB_FIELD("crystal", "pump_axis", crystal.pump_axis),
      SPDCLAB_FIELD("crystal", "signal_axis", crystal.signal_axis),
      SPDCLAB_FIELD("crystal", "idler_axis", crystal.idler_axis),

      SPDCLAB_FIELD("pump", "center_wavelength_nm", pump.center_wavelength_nm),
      SPDCLAB_FIELD("pump", "repetition_rate_mhz", pump.repetition_rate_mhz),
      SPDCLAB_FIELD("pump", "pulse_fwhm_ps", pump.pulse_fwhm_ps),
      SPDCLAB_FIELD("pump", "time_bandwidth_product", pump.time_bandwidth_product),
      SPDCLAB_FIELD("pump", "average_power_mw", pump.average_power_mw),

      SPDCLAB_FIELD("cavity", "mirror_reflectivity_high", cavity.mirror_reflectivity_high),
      SPDCLAB_FIELD("cavity", "mirror_reflectivity_out", cavity.mirror_reflectivity_out),
      SPDCLAB_FIELD("cavity", "compensator_length_mm", cavity.compensator_length_mm),
      SPDCLAB_FIELD("cavity", "air_gap_mm", cavity.air_gap_mm),
      SPDCLAB_FIELD("cavity", "transverse_splitting_ghz", cavity.transverse_splitting_ghz),
      SPDCLAB_FIELD("cavity", "transverse_mode_weight", cavity.transverse_mode_weight),
      SPDCLAB_FIELD("cavity", "center_offset_ghz", cavity.center_offset_ghz),

      SPDCLAB_FIELD("filter", "enabled", filter.enabled),
      SPDCLAB_FIELD("filter", "fsr_ghz", filter.etalon.fsr_ghz),
      SPDCLAB_FIELD("filter", "bandwidth_fwhm_ghz", filter.etalon.bandwidth_fwhm_ghz),
      SPDCLAB_FIELD("filter", "center_offset_ghz", filter.etalon.center_offset_ghz),

      SPDCLAB_FIELD("tuning", "temperature_min_c", tuning.temperature.min),
      SPDCLAB_FIELD("tuning", "temperature_max_c", tuning.temperature.max),
      SPDCLAB_FIELD("tuning", "temperature_step_c", tuning.temperature.step),
      SPDCLAB_FIELD("tuning", "wavelength_min_nm", tuning.wavelength.min),
      SPDCLAB_FIELD("tuning", "wavelength_max_nm", tuning.wavelength.max),
      SPDCLAB_FIELD("tuning", "wavelength_step_nm", tuning.wavelength.step),

      SPDCLAB_FIELD("gain", "half_span_ghz", gain.half_span_ghz),
      SPDCLAB_FIELD("gain", "step_ghz", gain.step_ghz),
      SPDCLAB_FIELD("gain", "model", gain.model),

      SPDCLAB_FIELD("spectrum", "half_span_ghz", spectrum.half_span_ghz),
      SPDCLAB_FIELD("spectrum", "step_ghz", spectrum.step_ghz),

      SPDCLAB_FIELD("coherence", "half_span_ghz", coherence.half_span_ghz),
      SPDCLAB_FIELD("coherence", "step_ghz", coherence.step_ghz),
      SPDCLAB_FIELD("coherence", "max_delay_ps", coherence.max_delay_ps),
      SPDCLAB_FIELD("coherence", "fine_limit_ps", coherence.fine_limit_ps),
      SPDCLAB_FIELD("coherence", "fine_step_ps", coherence.fine_step_ps),
      SPDCLAB_FIELD("coherence", "coarse_step_ps", coherence.coarse_step_ps),

      SPDCLAB_FIELD("wavepacket", "lifetime_ps", wavepacket.params.lifetime_ps),
      SPDCLAB_FIELD("wavepacket", "beat_frequency_ghz", wavepacket.params.beat_frequency_ghz),
      SPDCLAB_FIELD("wavepacket", "beat_visibility", wavepacket.params.beat_visibility),
      SPDCLAB_FIELD("wavepacket", "phase_rad", wavepacket.params.phase_rad),
      SPDCLAB_FIELD("wavepacket", "amplitude", wavepacket.params.amplitude),
      SPDCLAB_FIELD("wavepacket", "bin_ps", wavepacket.bin_ps),
      SPDCLAB_FIELD("wavepacket", "t_max_ps", wavepacket.t_max_ps),
      SPDCLAB_FIELD("wavepacket", "fit_beat", wavepacket.fit_beat),

      SPDCLAB_FIELD("detectors", "idler_efficiency", detectors.set.idler.efficiency),
      SPDCLAB_FIELD("detectors", "transmitted_efficiency", detectors.set.transmitted.efficiency),
      SPDCLAB_FIELD("detectors", "reflected_efficiency", detectors.set.reflected.efficiency),
      SPDCLAB_FIELD("detectors", "idler_dark_rate_cps", detectors.set.idler.dark_count_rate_cps),
      SPDCLAB_FIELD("detectors", "transmitted_dark_rate_cps", detectors.set.transmitted.dark_count_rate_cps),
      SPDCLAB_FIELD("detectors", "reflected_dark_rate_cps", detectors.set.reflected.dark_count_rate_cps),
      SPDCLAB_FIELD("detectors", "idler_window_ns", detectors.set.idler.coincidence_window_ns),
      SPDCLAB_FIELD("detectors", "transmitted_window_ns", detectors.set.transmitted.coincidence_window_ns),
      SPDCLAB_FIELD("detectors", "reflected_window_ns", detectors.set.reflected.coincidence_window_ns),
      SPDCLAB_FIELD("detectors", "splitter_t", detectors.set.splitter_t),

      SPDCLAB_FIELD("source", "alpha_per_mw", source.model.alpha_per_mw),
      SPDCLAB_FIELD("source", "distribution", source.model.distribution),
      SPDCLAB_FIELD("source", "schmidt_modes", source.model.schmidt_modes),
      SPDCLAB_FIELD("source", "emission", source.model.emission),

      SPDCLAB_FIELD("sweep", "powers_mw", sweep.powers_mw),
      SPDCLAB_FIELD("sweep", "pulses_per_point", sweep.pulses_per_point),
      SPDCLAB_FIELD("sweep", "m_cutoff", sweep.m_cutoff),

      SPDCLAB_FIELD("qd", "center_wavelength_nm", qd.center_wavelength_nm),
      SPDCLAB_FIELD("qd", "lifetime_ps", qd.lifetime_ps),
      SPDCLAB_FIELD("qd", "broadened_fwhm_mhz", qd.broadened_fwhm_mhz),
      SPDCLAB_FIELD("qd", "stark_slope_ghz_per_v", qd.stark_slope_ghz_per_v),
      SPDCLAB_FIELD("qd", "reference_bias_v", qd.reference_bias_v),
      SPDCLAB_FIELD("qd", "lineshape", qd.lineshape),

      SPDCLAB_FIELD("scan", "bias_min_v", scan.bias_min_v),
      SPDCLAB_FIELD("scan", "bias_max_v", scan.bias_max_v),
      SPDCLAB_FIELD("scan", "bias_step_v", scan.bias_step_v),
      SPDCLAB_FIELD("scan", "incident_rate_per_s", scan.settings.incident_rate_per_s),
      SPDCLAB_FIELD("scan", "collection_efficiency", scan.settings.collection_efficiency),
      SPDCLAB_FIELD("scan", "kappa", scan.settings.kappa),
      SPDCLAB_FIELD("scan", "dark_rate_cps", scan.settings.dark_rate_cps),
      SPDCLAB_FIELD("scan", "integration_time_s", scan.settings.integration_time_s),

      SPDCLAB_FIELD("match", "target_lifetime_ps", match.target_lifetime_ps),
      SPDCLAB_FIELD("match", "gap_min_mm", match.gap_min_mm),
      SPDCLAB_FIELD("match", "gap_max_mm", match.gap_max_mm),
      SPDCLAB_FIELD("match", "tolerance_mm", match.tolerance_mm),
      SPDCLAB_FIELD("match", "mismatch_convention", match.mismatch_convention),
      SPDCLAB_FIELD("match", "include_beat", match.include_beat),
  };
  return fields;
}

#undef SPDCLAB_FIELD

inline const Field* find_field(std::string_view section, std::string_view key) {
  for (const auto& f : schema()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

inline bool known_section(std::string_view s) {
  for (const auto& f : schema()) {
    if (f.section == s) return true;
  }
  return false;
}

}  // namespace detail

/// Every invariant violation, each prefixed with its parameter path.
inline std::vector<std::string> validation_problems(const SimulationConfig& c) {
  std::vector<std::string> p;
  const auto need = [&](bool ok, const std::string& path, const std::string& msg) {
    if (!ok) p.push_back(path + ": " + msg);
  };
  const auto in01_open = [](double v) { return v > 0.0 && v < 1.0; };
  const auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };

  need(c.crystal.length_mm > 0.0, "crystal.length_mm", "must be > 0");
  need(!c.crystal.poling_period_um || *c.crystal.poling_period_um > 0.0, "crystal.poling_period_um",
       "must be > 0 or none");

  need(c.pump.center_wavelength_nm > 0.0, "pump.center_wavelength_nm", "must be > 0");
  need(c.pump.repetition_rate_mhz > 0.0, "pump.repetition_rate_mhz", "must be > 0");
  need(c.pump.pulse_fwhm_ps > 0.0, "pump.pulse_fwhm_ps", "must be > 0");
  need(c.pump.time_bandwidth_product > 0.0, "pump.time_bandwidth_product", "must be > 0");
  need(c.pump.average_power_mw >= 0.0, "pump.average_power_mw", "must be >= 0");

  need(in01_open(c.cavity.mirror_reflectivity_high), "cavity.mirror_reflectivity_high", "mirror_reflectivity in (0,1)");
  need(in01_open(c.cavity.mirror_reflectivity_out), "cavity.mirror_reflectivity_out", "mirror_reflectivity in (0,1)");
  need(c.cavity.compensator_length_mm >= 0.0, "cavity.compensator_length_mm", "must be >= 0");
  need(c.cavity.air_gap_mm >= 0.0, "cavity.air_gap_mm", "must be >= 0");
  need(c.cavity.transverse_splitting_ghz >= 0.0, "cavity.transverse_splitting_ghz", "must be >= 0");
  need(in01(c.cavity.transverse_mode_weight), "cavity.transverse_mode_weight", "transverse_mode_weight in [0,1]");

  need(c.filter.etalon.fsr_ghz > 0.0, "filter.fsr_ghz", "must be > 0");
  need(c.filter.etalon.bandwidth_fwhm_ghz > 0.0 && c.filter.etalon.bandwidth_fwhm_ghz < c.filter.etalon.fsr_ghz,
       "filter.bandwidth_fwhm_ghz", "must lie in (0, fsr_ghz)");

  need(c.tuning.temperature.step > 0.0 && c.tuning.temperature.max > c.tuning.temperature.min, "tuning.temperature",
       "need min < max and step > 0");
  need(c.tuning.wavelength.step > 0.0 && c.tuning.wavelength.max > c.tuning.wavelength.min, "tuning.wavelength",
       "need min < max and step > 0");

  need(c.gain.half_span_ghz > 0.0, "gain.half_span_ghz", "must be > 0");
  need(c.gain.step_ghz > 0.0, "gain.step_ghz", "must be > 0");
  need(c.spectrum.half_span_ghz > 0.0, "spectrum.half_span_ghz", "must be > 0");
  need(c.spectrum.step_ghz > 0.0, "spectrum.step_ghz", "must be > 0");
  need(c.coherence.half_span_ghz > 0.0, "coherence.half_span_ghz", "must be > 0");
  need(c.coherence.step_ghz > 0.0, "coherence.step_ghz", "must be > 0");
  need(c.coherence.max_delay_ps > 0.0, "coherence.max_delay_ps", "must be > 0");
  need(c.coherence.fine_limit_ps >= 0.0, "coherence.fine_limit_ps", "must be >= 0");
  need(c.coherence.fine_step_ps > 0.0, "coherence.fine_step_ps", "must be > 0");
  need(c.coherence.coarse_step_ps > 0.0, "coherence.coarse_step_ps", "must be > 0");

  const auto& w = c.wavepacket;
  need(w.params.lifetime_ps > 0.0, "wavepacket.lifetime_ps", "must be > 0");
  need(!w.params.beat_frequency_ghz || *w.params.beat_frequency_ghz > 0.0, "wavepacket.beat_frequency_ghz",
       "must be > 0 or none");
  need(in01(w.params.beat_visibility), "wavepacket.beat_visibility", "must lie in [0,1]");
  need(w.params.amplitude >= 0.0, "wavepacket.amplitude", "must be >= 0");
  need(w.bin_ps > 0.0, "wavepacket.bin_ps", "must be > 0");
  need(w.t_max_ps > w.bin_ps, "wavepacket.t_max_ps", "must exceed bin_ps");

  const auto& d = c.detectors.set;
  for (const auto& [name, spec] : {std::pair{"idler", &d.idler}, std::pair{"transmitted", &d.transmitted},
                                   std::pair{"reflected", &d.reflected}}) {
    const std::string base = std::string("detectors.") + name;
    need(in01(spec->efficiency), base + "_efficiency", "efficiency in [0,1]");
    need(spec->dark_count_rate_cps >= 0.0, base + "_dark_rate_cps", "must be >= 0");
    need(spec->coincidence_window_ns >= 0.0, base + "_window_ns", "must be >= 0");
    need(spec->dark_probability() <= 1.0, base + "_dark_rate_cps", "dark probability per window exceeds 1");
  }
  need(in01(d.splitter_t), "detectors.splitter_t", "must lie in [0,1]");

  need(c.source.model.alpha_per_mw >= 0.0, "source.alpha_per_mw", "must be >= 0");
  need(c.source.model.schmidt_modes >= 1, "source.schmidt_modes", "must be >= 1");

  need(!c.sweep.powers_mw.empty(), "sweep.powers_mw", "must not be empty");
  for (double pw : c.sweep.powers_mw) {
    if (!(pw >= 0.0)) {
      need(false, "sweep.powers_mw", "powers must be >= 0");
      break;
    }
  }
  need(c.sweep.pulses_per_point >= 1, "sweep.pulses_per_point", "must be >= 1");
  need(c.sweep.m_cutoff >= 1, "sweep.m_cutoff", "must be >= 1");

  need(c.qd.lifetime_ps > 0.0, "qd.lifetime_ps", "must be > 0");
  need(c.qd.broadened_fwhm_mhz > 0.0 && c.qd.broadened_fwhm_mhz >= c.qd.natural_fwhm_mhz(), "qd.broadened_fwhm_mhz",
       "must be >= the natural linewidth 1/(2 pi lifetime)");

  const auto& s = c.scan;
  need(s.bias_step_v > 0.0 && s.bias_max_v > s.bias_min_v, "scan.bias", "need bias_min_v < bias_max_v and step > 0");
  need(s.settings.incident_rate_per_s >= 0.0, "scan.incident_rate_per_s", "must be >= 0");
  need(in01(s.settings.collection_efficiency), "scan.collection_efficiency", "must lie in [0,1]");
  need(s.settings.kappa >= 0.0, "scan.kappa", "must be >= 0");
  need(s.settings.dark_rate_cps >= 0.0, "scan.dark_rate_cps", "must be >= 0");
  need(s.settings.integration_time_s > 0.0, "scan.integration_time_s", "must be > 0");

  need(c.match.target_lifetime_ps > 0.0, "match.target_lifetime_ps", "must be > 0");
  need(c.match.gap_min_mm >= 0.0 && c.match.gap_max_mm > c.match.gap_min_mm, "match.gap_min_mm",
       "need 0 <= gap_min_mm < gap_max_mm");
  need(c.match.tolerance_mm > 0.0, "match.tolerance_mm", "must be > 0");
  return p;
}

/// Applies "section.key=value" overrides.
inline void apply_overrides(SimulationConfig& cfg, const std::vector<std::string>& overrides) {
  std::vector<std::string> problems;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      problems.push_back("override '" + o + "': expected section.key=value");
      continue;
    }
    const std::string section = detail::trim(o.substr(0, dot));
    const std::string key = detail::trim(o.substr(dot + 1, eq - dot - 1));
    const auto* f = detail::find_field(section, key);
    if (!f) {
      problems.push_back("override '" + o + "': unknown key " + section + "." + key);
      continue;
    }
    try {
      f->set(cfg, std::string_view(o).substr(eq + 1), section + "." + key);
    } catch (const Error& e) {
      problems.push_back(std::string("override: ") + e.what());
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
}

/// Parses configuration text; throws ConfigError listing every problem.
inline SimulationConfig parse_config(std::string_view text, const std::string& origin = "<string>",
                                     bool validate = true) {
  SimulationConfig cfg;
  std::vector<std::string> problems;
  std::set<std::string> seen_sections;
  std::set<std::string> seen_keys;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto hash = line.find('#');
    const std::string body = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') {
        problems.push_back(where + ": malformed section header '" + body + "'");
        continue;
      }
      section = detail::trim(body.substr(1, body.size() - 2));
      if (!detail::known_section(section)) {
        problems.push_back(where + ": unknown section [" + section + "]");
      } else if (!seen_sections.insert(section).second) {
        problems.push_back(where + ": duplicate section [" + section + "]");
      }
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      problems.push_back(where + ": expected key = value");
      continue;
    }
    const std::string key = detail::trim(body.substr(0, eq));
    if (section.empty()) {
      problems.push_back(where + ": key '" + key + "' outside any section");
      continue;
    }
    if (!detail::known_section(section)) continue;
    const auto* f = detail::find_field(section, key);
    if (!f) {
      problems.push_back(where + ": unknown key '" + key + "' in [" + section + "]");
      continue;
    }
    if (!seen_keys.insert(section + "." + key).second) {
      problems.push_back(where + ": duplicate key " + section + "." + key);
      continue;
    }
    try {
      f->set(cfg, std::string_view(body).substr(eq + 1), where + ": " + section + "." + key);
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  }
  std::string missing;
  for (const auto& s : required_sections()) {
    if (!seen_sections.count(s)) missing += (missing.empty() ? "" : ", ") + ("[" + s + "]");
  }
  if (!missing.empty()) problems.push_back(origin + ": missing required sections " + missing);
  if (problems.empty() && validate) {
    for (auto& v : validation_problems(cfg)) problems.push_back(std::move(v));
  }
  if (!problems.empty()) throw ConfigError(problems);
  return cfg;
}

inline SimulationConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError({"cannot open config file '" + path + "'"});
  std::stringstream ss;
  ss << f.rdbuf();
  SimulationConfig cfg = parse_config(ss.str(), path, false);
  apply_overrides(cfg, overrides);
  if (auto p = validation_problems(cfg); !p.empty()) throw ConfigError(p);
  cfg.base_dir = std::filesystem::path(path).parent_path().string();
  return cfg;
}

/// Canonical text form; parse_config(serialize(c)) == c.
inline std::string serialize(const SimulationConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : detail::schema()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

inline bool operator==(const SimulationConfig& a, const SimulationConfig& b) { return serialize(a) == serialize(b); }

/// 64-bit FNV-1a of the canonical serialization.
inline std::uint64_t config_hash(const SimulationConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash_hex(const SimulationConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

/// Locates the dispersion file: absolute path, relative to the config file,
/// $SPDCLAB_DATA_DIR, then the data directory compiled into the build.
inline std::string resolve_data_file(const SimulationConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path p(cfg.crystal.dispersion_file);
  std::vector<fs::path> tries;
  if (p.is_absolute()) {
    tries.push_back(p);
  } else {
    tries.push_back(fs::path(cfg.base_dir.empty() ? "." : cfg.base_dir) / p);
    if (const char* env = std::getenv("SPDCLAB_DATA_DIR")) tries.push_back(fs::path(env) / p);
#ifdef SPDCLAB_DATA_DIR
    tries.push_back(fs::path(SPDCLAB_DATA_DIR) / p);
#endif
  }
  for (const auto& t : tries) {
    std::error_code ec;
    if (fs::is_regular_file(t, ec)) return t.string();
  }
  ArgumentError e("dispersion file '" + cfg.crystal.dispersion_file + "' not found (set SPDCLAB_DATA_DIR)");
  e.set_param_path("crystal.dispersion_file");
  throw e;
}

}  // namespace spdclab

#endif  // SPDCLAB_CONFIG_HPP
