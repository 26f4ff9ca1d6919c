#ifndef SPDCLAB_CAVITY_HPP
#define SPDCLAB_CAVITY_HPP

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spdclab/core.hpp"
#include "spdclab/dispersion.hpp"
#include "spdclab/phasematch.hpp"

namespace spdclab {

/// Finesse of a two-mirror cavity: pi (R1 R2)^(1/4) / (1 - sqrt(R1 R2)).
inline double finesse(double r_high, double r_out) {
  if (!(r_high > 0.0 && r_high < 1.0) || !(r_out > 0.0 && r_out < 1.0)) {
    throw ArgumentError("finesse: mirror reflectivities must lie in (0, 1)");
  }
  const double r = std::sqrt(r_high * r_out);
  return kPi * std::sqrt(r) / (1.0 - r);
}

enum class Polarization { signal, idler };

/// One crystal inside the cavity. Signal and idler see the axes listed here.
struct IntracavityElement {
  std::string name;
  double length_mm = 0.0;
  SellmeierSet signal_set;
  SellmeierSet idler_set;
};

struct CavitySpec {
  double mirror_reflectivity_high = 0.998;
  double mirror_reflectivity_out = 0.90;
  std::vector<IntracavityElement> elements;
  double air_gap_mm = 0.0;
  double transverse_splitting_ghz = 2.8;
  /// Height of the transverse-mode comb relative to the TEM00 comb (fit by eye).
  double transverse_mode_weight = 0.5;
  /// TEM00 resonance position relative to the detuning origin.
  double center_offset_ghz = 0.0;

  double cavity_finesse() const { return finesse(mirror_reflectivity_high, mirror_reflectivity_out); }

  void validate() const {
    if (!(mirror_reflectivity_high > 0.0 && mirror_reflectivity_high < 1.0) ||
        !(mirror_reflectivity_out > 0.0 && mirror_reflectivity_out < 1.0)) {
      throw ArgumentError("mirror_reflectivity in (0,1)");
    }
    if (!(air_gap_mm >= 0.0)) throw ArgumentError("cavity air gap must be >= 0");
    for (const auto& e : elements) {
      if (!(e.length_mm >= 0.0)) throw ArgumentError("intracavity element '" + e.name + "' length must be >= 0");
    }
    if (!(transverse_mode_weight >= 0.0 && transverse_mode_weight <= 1.0)) {
      throw ArgumentError("transverse_mode_weight in [0,1]");
    }
  }
};

/// Standard source cavity: PPKTP (signal on the crystal's signal axis) followed
/// by a KTP compensator with the axes swapped.
inline CavitySpec make_source_cavity(const CrystalSpec& crystal, double compensator_length_mm, double air_gap_mm) {
  CavitySpec c;
  c.elements.push_back({"PPKTP", crystal.length_mm, crystal.material.axis(crystal.signal_axis),
                        crystal.material.axis(crystal.idler_axis)});
  if (compensator_length_mm > 0.0) {
    c.elements.push_back({"KTP compensator", compensator_length_mm, crystal.material.axis(crystal.idler_axis),
                          crystal.material.axis(crystal.signal_axis)});
  }
  c.air_gap_mm = air_gap_mm;
  return c;
}

/// Round-trip-relevant group optical length (mm): air gap + sum n_g L.
inline double optical_length_mm(const CavitySpec& cavity, double wavelength_nm, double temperature_c,
                                Polarization pol = Polarization::signal) {
  double len = cavity.air_gap_mm;
  const double l = wavelength_nm * 1e-3;
  for (const auto& e : cavity.elements) {
    if (e.length_mm == 0.0) continue;
    const auto& set = pol == Polarization::signal ? e.signal_set : e.idler_set;
    len += group_index(set, l, temperature_c) * e.length_mm;
  }
  return len;
}

/// Free spectral range in GHz, c / (2 sum n_g L).
inline double free_spectral_range(const CavitySpec& cavity, double wavelength_nm, double temperature_c,
                                  Polarization pol = Polarization::signal) {
  const double len = optical_length_mm(cavity, wavelength_nm, temperature_c, pol);
  if (!(len > 0.0)) throw ArgumentError("free_spectral_range: total optical length must be > 0");
  return kSpeedOfLight / (2.0 * len * 1e-3) * 1e-9;
}

/// Photon intensity lifetime of the cavity mode, finesse / (2 pi FSR), in ps.
inline double cavity_lifetime_ps(const CavitySpec& cavity, double wavelength_nm, double temperature_c) {
  return cavity.cavity_finesse() / (kTwoPi * free_spectral_range(cavity, wavelength_nm, temperature_c)) * 1e3;
}

/// Air gap (mm) that puts the signal FSR at `target_fsr_ghz`.
inline double calibrate_air_gap(CavitySpec cavity, double wavelength_nm, double temperature_c, double target_fsr_ghz) {
  cavity.air_gap_mm = 0.0;
  const double crystals = optical_length_mm(cavity, wavelength_nm, temperature_c);
  const double total = kSpeedOfLight / (2.0 * target_fsr_ghz * 1e9) * 1e3;
  if (total < crystals) throw InfeasibleError("calibrate_air_gap: target FSR too large for the crystals", 0.0, 0.0);
  return total - crystals;
}

struct ModeComb {
  double fsr_ghz = 0.0;
  double mode_linewidth_fwhm_ghz = 0.0;
  double center_frequency_offset_ghz = 0.0;
  std::vector<double> transverse_offsets_ghz;
  double transverse_weight = 0.0;
  double signal_idler_fsr_mismatch_ghz = 0.0;

  double finesse() const { return fsr_ghz / mode_linewidth_fwhm_ghz; }

  void validate() const {
    if (!(fsr_ghz > 0.0)) throw ArgumentError("mode comb: fsr must be > 0");
    if (!(mode_linewidth_fwhm_ghz > 0.0 && mode_linewidth_fwhm_ghz < fsr_ghz)) {
      throw ArgumentError("mode comb: linewidth must lie in (0, fsr)");
    }
    if (!(signal_idler_fsr_mismatch_ghz >= 0.0)) throw ArgumentError("mode comb: mismatch must be >= 0");
  }
};

inline ModeComb mode_comb(const CavitySpec& cavity, double wavelength_nm, double temperature_c) {
  cavity.validate();
  ModeComb comb;
  comb.fsr_ghz = free_spectral_range(cavity, wavelength_nm, temperature_c, Polarization::signal);
  const double fsr_idler = free_spectral_range(cavity, wavelength_nm, temperature_c, Polarization::idler);
  comb.mode_linewidth_fwhm_ghz = comb.fsr_ghz / cavity.cavity_finesse();
  comb.center_frequency_offset_ghz = cavity.center_offset_ghz;
  if (cavity.transverse_mode_weight > 0.0) comb.transverse_offsets_ghz = {cavity.transverse_splitting_ghz};
  comb.transverse_weight = cavity.transverse_mode_weight;
  comb.signal_idler_fsr_mismatch_ghz = std::abs(comb.fsr_ghz - fsr_idler);
  return comb;
}

namespace detail {

inline double airy(double fsr, double finesse, double detuning) {
  const double coeff = 2.0 * finesse / kPi;
  const double s = std::sin(kPi * detuning / fsr);
  return 1.0 / (1.0 + coeff * coeff * s * s);
}

}  // namespace detail

/// Airy transmission of the TEM00 comb, 1 on resonance.
inline double airy_transmission(const ModeComb& comb, double detuning_ghz) {
  return detail::airy(comb.fsr_ghz, comb.finesse(), detuning_ghz - comb.center_frequency_offset_ghz);
}

/// TEM00 comb plus weighted transverse combs, scaled so the sum never exceeds 1.
inline double comb_transmission(const ModeComb& comb, double detuning_ghz) {
  double t = airy_transmission(comb, detuning_ghz);
  for (double off : comb.transverse_offsets_ghz) {
    t += comb.transverse_weight * airy_transmission(comb, detuning_ghz - off);
  }
  return t / (1.0 + comb.transverse_weight * static_cast<double>(comb.transverse_offsets_ghz.size()));
}

/// External filter etalon.
struct EtalonSpec {
  double fsr_ghz = 1000.0;
  double bandwidth_fwhm_ghz = 6.0;
  double center_offset_ghz = 0.0;

  void validate() const {
    if (!(fsr_ghz > 0.0) || !(bandwidth_fwhm_ghz > 0.0) || !(bandwidth_fwhm_ghz < fsr_ghz)) {
      throw ArgumentError("etalon: need 0 < bandwidth_fwhm < fsr");
    }
  }
};

inline double etalon_transmission(const EtalonSpec& e, double detuning_ghz) {
  return detail::airy(e.fsr_ghz, e.fsr_ghz / e.bandwidth_fwhm_ghz, detuning_ghz - e.center_offset_ghz);
}

/// Filtered source spectrum: gain envelope x cavity comb x filter etalon.
///
/// The pulsed pump is broader than the signal-idler FSR mismatch, so every
/// longitudinal mode inside the gain bandwidth is taken as occupied.
inline SpectralDensity output_spectrum(const SpectralDensity& gain, const ModeComb& comb, const PumpSpec& pump,
                                       const std::optional<EtalonSpec>& filter) {
  gain.validate();
  comb.validate();
  pump.validate();
  if (gain.size() < 2) throw ArgumentError("output_spectrum: gain grid needs at least two points");
  if (gain.max_step() > comb.mode_linewidth_fwhm_ghz / 10.0 * (1.0 + 1e-9)) {
    std::ostringstream os;
    os << "output_spectrum: grid step " << gain.max_step() << " GHz exceeds mode_linewidth/10 = "
       << comb.mode_linewidth_fwhm_ghz / 10.0 << " GHz";
    throw ArgumentError(os.str());
  }
  if (filter) {
    filter->validate();
    const double lo = filter->center_offset_ghz - filter->bandwidth_fwhm_ghz;
    const double hi = filter->center_offset_ghz + filter->bandwidth_fwhm_ghz;
    if (gain.detuning_ghz.front() > lo || gain.detuning_ghz.back() < hi) {
      throw ArgumentError("output_spectrum: gain grid does not cover the filter passband");
    }
  }
  SpectralDensity out = gain;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out.detuning_ghz[i];
    double v = gain.intensity[i] * comb_transmission(comb, d);
    if (filter) v *= etalon_transmission(*filter, d);
    out.intensity[i] = v;
  }
  return out;
}

/// Local maxima strictly above `fraction` of the global maximum.
inline std::vector<std::size_t> peaks_above(const SpectralDensity& s, double fraction) {
  std::vector<std::size_t> idx;
  const double thr = fraction * s.peak();
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double v = s.intensity[i];
    if (v > thr && v >= s.intensity[i - 1] && v > s.intensity[i + 1]) idx.push_back(i);
  }
  return idx;
}

}  // namespace spdclab

#endif  // SPDCLAB_CAVITY_HPP
