#ifndef SPDCLAB_PHASEMATCH_HPP
#define SPDCLAB_PHASEMATCH_HPP

#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "spdclab/core.hpp"
#include "spdclab/dispersion.hpp"

namespace spdclab {

/// Pulsed pump laser.
struct PumpSpec {
  double center_wavelength_nm = 470.98;
  double repetition_rate_mhz = 76.0;
  double pulse_fwhm_ps = 50.0;
  /// Time-bandwidth product of the pulse shape (0.315: transform-limited sech^2).
  double time_bandwidth_product = 0.315;
  double average_power_mw = 5.0;

  /// Transform-limited spectral FWHM in GHz.
  double spectral_fwhm_ghz() const { return time_bandwidth_product / pulse_fwhm_ps * 1e3; }

  double degenerate_wavelength_nm() const { return 2.0 * center_wavelength_nm; }

  void validate() const {
    if (!(center_wavelength_nm > 0.0)) throw ArgumentError("pump wavelength must be > 0");
    if (!(repetition_rate_mhz > 0.0)) throw ArgumentError("pump repetition rate must be > 0");
    if (!(pulse_fwhm_ps > 0.0)) throw ArgumentError("pump pulse width must be > 0");
    if (!(time_bandwidth_product > 0.0)) throw ArgumentError("pump time-bandwidth product must be > 0");
    if (!(average_power_mw >= 0.0)) throw ArgumentError("pump power must be >= 0");
  }
};

/// Conjugate wavelength (nm) fixed by energy conservation with the pump.
inline double conjugate_wavelength_nm(const PumpSpec& pump, double wavelength_nm) {
  const double inv = 1.0 / pump.center_wavelength_nm - 1.0 / wavelength_nm;
  if (!(inv > 0.0)) throw ArgumentError("no conjugate wavelength: photon energy exceeds the pump's");
  return 1.0 / inv;
}

namespace detail {

/// k_p - k_s - k_i - 2 pi / Lambda - offset, all wavelengths in um.
inline double delta_k(const CrystalSpec& c, double t, double lp_um, double ls_um, double li_um) {
  double dk = wavevector(c.material.axis(c.pump_axis), lp_um, t) -
              wavevector(c.material.axis(c.signal_axis), ls_um, t) -
              wavevector(c.material.axis(c.idler_axis), li_um, t);
  if (c.poling_period_um) dk -= kTwoPi / *c.poling_period_um;
  return dk - c.phase_offset_rad_per_um;
}

inline double sinc_squared(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 3.0;
  const double s = std::sin(x) / x;
  return s * s;
}

}  // namespace detail

/// Quasi-phase-matched wave-vector mismatch in rad/um at the crystal temperature.
inline double delta_k0(const CrystalSpec& crystal, const PumpSpec& pump, double signal_wavelength_nm,
                       double idler_wavelength_nm) {
  const double mismatch =
      1.0 / pump.center_wavelength_nm - 1.0 / signal_wavelength_nm - 1.0 / idler_wavelength_nm;
  if (std::abs(mismatch) > 1e-9) {
    std::ostringstream os;
    os << "energy conservation violated: 1/lp - 1/ls - 1/li = " << mismatch << " nm^-1";
    throw ArgumentError(os.str());
  }
  return detail::delta_k(crystal, crystal.temperature_c, pump.center_wavelength_nm * 1e-3,
                         signal_wavelength_nm * 1e-3, idler_wavelength_nm * 1e-3);
}

/// Delta k0 at frequency-degenerate operation (ls = li = 2 lp).
inline double delta_k0_degenerate(const CrystalSpec& crystal, const PumpSpec& pump) {
  const double ld = pump.degenerate_wavelength_nm();
  return delta_k0(crystal, pump, ld, ld);
}

enum class GainModel {
  exact,   // full dispersion at each signal/idler frequency pair
  linear,  // delta k0 + group-index term only
};

/// sinc^2(delta k L / 2) versus signal detuning (GHz) from degeneracy, with the
/// idler at the opposite detuning.
inline SpectralDensity gain_spectrum(const CrystalSpec& crystal, const PumpSpec& pump,
                                     std::span<const double> detuning_ghz, GainModel model = GainModel::exact) {
  if (detuning_ghz.empty()) throw ArgumentError("gain_spectrum: empty detuning grid");
  const std::size_t n = detuning_ghz.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double asym = detuning_ghz[i] + detuning_ghz[n - 1 - i];
    if (std::abs(asym) > 1e-9 * (1.0 + std::abs(detuning_ghz[i]))) {
      throw ArgumentError("gain_spectrum: detuning grid must be symmetric about 0");
    }
  }
  crystal.validate();
  const double length_um = crystal.length_mm * 1e3;
  const double nu_d = frequency_ghz(pump.degenerate_wavelength_nm());
  const double lp = pump.center_wavelength_nm * 1e-3;
  const double t = crystal.temperature_c;

  SpectralDensity out;
  out.detuning_ghz.assign(detuning_ghz.begin(), detuning_ghz.end());
  out.intensity.resize(n);

  if (model == GainModel::linear) {
    const double ld_um = pump.degenerate_wavelength_nm() * 1e-3;
    const double dk0 = detail::delta_k(crystal, t, lp, ld_um, ld_um);
    const double dng = group_index(crystal.material.axis(crystal.signal_axis), ld_um, t) -
                       group_index(crystal.material.axis(crystal.idler_axis), ld_um, t);
    // rad/um per GHz of signal detuning
    const double slope = kTwoPi * dng * 1e9 / kSpeedOfLight * 1e-6;
    for (std::size_t i = 0; i < n; ++i) {
      const double dk = dk0 - slope * detuning_ghz[i];
      out.intensity[i] = detail::sinc_squared(0.5 * dk * length_um);
    }
    return out;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double ls = wavelength_nm(nu_d + detuning_ghz[i]) * 1e-3;
    const double li = wavelength_nm(nu_d - detuning_ghz[i]) * 1e-3;
    out.intensity[i] = detail::sinc_squared(0.5 * detail::delta_k(crystal, t, lp, ls, li) * length_um);
  }
  return out;
}

/// Signal-idler group-index difference n_gs - n_gi at `wavelength_nm`.
inline double group_index_mismatch(const CrystalSpec& crystal, double wavelength_nm) {
  const double l = wavelength_nm * 1e-3;
  return group_index(crystal.material.axis(crystal.signal_axis), l, crystal.temperature_c) -
         group_index(crystal.material.axis(crystal.idler_axis), l, crystal.temperature_c);
}

/// Closed-form gain FWHM (ordinary frequency, GHz) for a given group-index
/// mismatch and crystal length: 2 * 2 * 1.39 c / (2 pi L |dn_g|).
inline double fwhm_bandwidth_from_mismatch(double length_mm, double group_index_mismatch) {
  if (!(std::abs(group_index_mismatch) > 1e-6)) {
    throw ArgumentError(
        "fwhm_bandwidth: signal and idler group indices coincide; type-0/type-I phase matching is not supported");
  }
  if (!(length_mm > 0.0)) throw ArgumentError("fwhm_bandwidth: crystal length must be > 0");
  const double hz = 2.0 * (2.0 * 1.39 * kSpeedOfLight) / (kTwoPi * length_mm * 1e-3 * std::abs(group_index_mismatch));
  return hz * 1e-9;
}

inline double fwhm_bandwidth(const CrystalSpec& crystal, double center_wavelength_nm) {
  return fwhm_bandwidth_from_mismatch(crystal.length_mm, group_index_mismatch(crystal, center_wavelength_nm));
}

/// Degenerate-operation temperature: bisection on delta k0(T) at ls = li = 2 lp.
inline double degeneracy_temperature(const CrystalSpec& crystal, const PumpSpec& pump, double t_lo, double t_hi,
                                     double tolerance_c = 1e-4) {
  if (!(t_hi > t_lo)) throw ArgumentError("degeneracy_temperature: bracket must satisfy lo < hi");
  const auto f = [&](double t) { return delta_k0_degenerate(crystal.at_temperature(t), pump); };
  double flo = f(t_lo);
  const double fhi = f(t_hi);
  if (flo == 0.0) return t_lo;
  if (fhi == 0.0) return t_hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    std::ostringstream os;
    os << "no degeneracy root in [" << t_lo << ", " << t_hi << "] C: delta k0 = " << flo << " and " << fhi
       << " rad/um at the ends";
    throw RootNotFoundError(os.str());
  }
  while (t_hi - t_lo > tolerance_c) {
    const double mid = 0.5 * (t_lo + t_hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      t_lo = mid;
      flo = fm;
    } else {
      t_hi = mid;
    }
  }
  return 0.5 * (t_lo + t_hi);
}

/// Phase offset that makes `target_c` the degeneracy temperature.
inline double calibrate_phase_offset(const CrystalSpec& crystal, const PumpSpec& pump, double target_c) {
  return crystal.phase_offset_rad_per_um + delta_k0_degenerate(crystal.at_temperature(target_c), pump);
}

// ---------------------------------------------------------------------------
// Temperature tuning curves
// ---------------------------------------------------------------------------

struct AxisRange {
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;
};

/// Signal (signal-axis photon at the grid wavelength) and idler branches of the
/// down-conversion spectrum versus crystal temperature. Row-major matrices,
/// rows = temperature, columns = wavelength, each branch normalized to max 1.
struct TuningCurve {
  std::vector<double> temperatures_c;
  std::vector<double> wavelengths_nm;
  std::vector<double> signal;
  std::vector<double> idler;

  std::size_t rows() const { return temperatures_c.size(); }
  std::size_t cols() const { return wavelengths_nm.size(); }
  double signal_at(std::size_t r, std::size_t c) const { return signal[r * cols() + c]; }
  double idler_at(std::size_t r, std::size_t c) const { return idler[r * cols() + c]; }
  /// Combined map as plotted: brighter of the two branches.
  double intensity(std::size_t r, std::size_t c) const { return std::max(signal_at(r, c), idler_at(r, c)); }
};

inline TuningCurve tuning_curve(const CrystalSpec& crystal, const PumpSpec& pump, const AxisRange& temperature,
                                const AxisRange& wavelength, std::size_t threads = 1) {
  crystal.validate();
  const double ld = pump.degenerate_wavelength_nm();
  if (!(wavelength.min <= ld && ld <= wavelength.max)) {
    std::ostringstream os;
    os << "tuning_curve: wavelength range [" << wavelength.min << ", " << wavelength.max
       << "] nm must contain the degenerate wavelength " << ld << " nm";
    throw ArgumentError(os.str());
  }
  TuningCurve tc;
  tc.temperatures_c = uniform_grid(temperature.min, temperature.max, temperature.step);
  tc.wavelengths_nm = uniform_grid(wavelength.min, wavelength.max, wavelength.step);
  if (tc.temperatures_c.size() < 2 || tc.wavelengths_nm.size() < 2) {
    throw ArgumentError("tuning_curve: temperature and wavelength ranges need at least two points");
  }
  const std::size_t nc = tc.cols();
  tc.signal.assign(tc.rows() * nc, 0.0);
  tc.idler.assign(tc.rows() * nc, 0.0);

  const double lp = pump.center_wavelength_nm * 1e-3;
  const double half_l = 0.5 * crystal.length_mm * 1e3;
  parallel_for(tc.rows(), threads, [&](std::size_t r) {
    const double t = tc.temperatures_c[r];
    for (std::size_t c = 0; c < nc; ++c) {
      const double l = tc.wavelengths_nm[c];
      const double lc = conjugate_wavelength_nm(pump, l);
      tc.signal[r * nc + c] = detail::sinc_squared(half_l * detail::delta_k(crystal, t, lp, l * 1e-3, lc * 1e-3));
      tc.idler[r * nc + c] = detail::sinc_squared(half_l * detail::delta_k(crystal, t, lp, lc * 1e-3, l * 1e-3));
    }
  });
  for (auto* m : {&tc.signal, &tc.idler}) {
    const double mx = *std::max_element(m->begin(), m->end());
    if (mx > 0.0) {
      for (double& v : *m) v /= mx;
    }
  }
  return tc;
}

struct BranchCrossing {
  double temperature_c = 0.0;
  double wavelength_nm = 0.0;
};

namespace detail {

/// Parabolic sub-grid peak position of one matrix row.
inline double row_peak(const std::vector<double>& m, std::size_t row, std::span<const double> x) {
  const std::size_t n = x.size();
  const double* y = m.data() + row * n;
  const auto i = static_cast<std::size_t>(std::max_element(y, y + n) - y);
  if (i == 0 || i + 1 == n) return x[i];
  const double denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
  if (denom >= 0.0) return x[i];
  const double shift = 0.5 * (y[i - 1] - y[i + 1]) / denom;
  return x[i] + shift * (x[i + 1] - x[i]);
}

}  // namespace detail

/// Temperature and wavelength where the two branch maxima cross.
inline BranchCrossing branch_crossing(const TuningCurve& tc) {
  std::vector<double> diff(tc.rows());
  std::vector<double> mid(tc.rows());
  std::vector<double> joint(tc.rows(), 0.0);
  for (std::size_t r = 0; r < tc.rows(); ++r) {
    const double ps = detail::row_peak(tc.signal, r, tc.wavelengths_nm);
    const double pi = detail::row_peak(tc.idler, r, tc.wavelengths_nm);
    diff[r] = ps - pi;
    mid[r] = 0.5 * (ps + pi);
    for (std::size_t c = 0; c < tc.cols(); ++c) joint[r] = std::max(joint[r], tc.signal_at(r, c) * tc.idler_at(r, c));
  }
  bool found = false;
  double best_joint = -1.0;
  BranchCrossing out;
  for (std::size_t r = 0; r + 1 < tc.rows(); ++r) {
    const bool crosses = (diff[r] == 0.0) || ((diff[r] > 0.0) != (diff[r + 1] > 0.0) && diff[r + 1] != 0.0);
    if (!crosses) continue;
    const double j = std::max(joint[r], joint[r + 1]);
    if (j <= best_joint) continue;
    best_joint = j;
    found = true;
    const double f = diff[r] == 0.0 ? 0.0 : diff[r] / (diff[r] - diff[r + 1]);
    out.temperature_c = tc.temperatures_c[r] + f * (tc.temperatures_c[r + 1] - tc.temperatures_c[r]);
    out.wavelength_nm = mid[r] + f * (mid[r + 1] - mid[r]);
  }
  if (!found) throw RootNotFoundError("branch_crossing: signal and idler branches do not cross in the sampled range");
  return out;
}

/// Temperature FWHM of the joint signal-idler intensity max_l S_signal * S_idler,
/// i.e. the temperature band over which both branches emit at a common wavelength.
inline double degeneracy_band(const TuningCurve& tc) {
  std::vector<double> joint(tc.rows(), 0.0);
  for (std::size_t r = 0; r < tc.rows(); ++r) {
    for (std::size_t c = 0; c < tc.cols(); ++c) joint[r] = std::max(joint[r], tc.signal_at(r, c) * tc.idler_at(r, c));
  }
  return numeric_fwhm(tc.temperatures_c, joint);
}

}  // namespace spdclab

#endif  // SPDCLAB_PHASEMATCH_HPP
