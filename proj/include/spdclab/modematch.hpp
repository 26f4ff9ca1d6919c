#ifndef SPDCLAB_MODEMATCH_HPP
#define SPDCLAB_MODEMATCH_HPP

// Mode overlap between the cavity-SPDC photon and an emitter photon, and the
// cavity length that matches a target lifetime. Overlaps are the pure-state
// (transform-limited) values and so upper bounds on two-photon interference
// visibility.

#include <algorithm>
#include <cmath>
#include <functional>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "spdclab/cavity.hpp"
#include "spdclab/core.hpp"
#include "spdclab/temporal.hpp"

namespace spdclab {

/// |<a|b>|^2 for one-sided exponential wavepackets: 4 g_a g_b / (g_a + g_b)^2.
inline double temporal_overlap(double tau_a_ps, double tau_b_ps) {
  if (!(tau_a_ps > 0.0) || !(tau_b_ps > 0.0)) throw ArgumentError("temporal_overlap: lifetimes must be > 0");
  const double ga = 1.0 / tau_a_ps, gb = 1.0 / tau_b_ps;
  return 4.0 * ga * gb / ((ga + gb) * (ga + gb));
}

/// Numeric overlap of two intensity profiles on a shared uniform-or-not time
/// grid, using amplitudes sqrt(I): (int sqrt(Ia Ib))^2 / (int Ia int Ib).
inline double temporal_overlap_profiles(std::span<const double> times_ps, std::span<const double> ia,
                                        std::span<const double> ib) {
  if (times_ps.size() != ia.size() || times_ps.size() != ib.size() || times_ps.size() < 2) {
    throw ArgumentError("temporal_overlap_profiles: need matching grids with >= 2 points");
  }
  double sab = 0.0, sa = 0.0, sb = 0.0;
  for (std::size_t i = 1; i < times_ps.size(); ++i) {
    const double h = 0.5 * (times_ps[i] - times_ps[i - 1]);
    sab += h * (std::sqrt(ia[i - 1] * ib[i - 1]) + std::sqrt(ia[i] * ib[i]));
    sa += h * (ia[i - 1] + ia[i]);
    sb += h * (ib[i - 1] + ib[i]);
  }
  if (!(sa > 0.0) || !(sb > 0.0)) throw ArgumentError("temporal_overlap_profiles: zero profile");
  return sab * sab / (sa * sb);
}

/// Overlap of two wavepackets including their beat terms, integrated to 40
/// of the longer lifetime on a 1 ps grid.
inline double temporal_overlap_with_beat(const WavepacketParams& a, const WavepacketParams& b) {
  const double t_max = 40.0 * std::max(a.lifetime_ps, b.lifetime_ps);
  const auto t = uniform_grid(0.0, t_max, 1.0);
  std::vector<double> ia(t.size()), ib(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    ia[i] = wavepacket_intensity(a, t[i]);
    ib[i] = wavepacket_intensity(b, t[i]);
  }
  return temporal_overlap_profiles(t, ia, ib);
}

/// <sa, sb> / (|sa| |sb|) of two spectral intensities. Different grids are
/// merged and both spectra interpolated (zero outside their support).
inline double spectral_overlap(const SpectralDensity& sa, const SpectralDensity& sb) {
  sa.validate();
  sb.validate();
  std::vector<double> grid;
  if (sa.detuning_ghz == sb.detuning_ghz) {
    grid = sa.detuning_ghz;
  } else {
    grid.reserve(sa.size() + sb.size());
    std::merge(sa.detuning_ghz.begin(), sa.detuning_ghz.end(), sb.detuning_ghz.begin(), sb.detuning_ghz.end(),
               std::back_inserter(grid));
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  if (grid.size() < 2) throw ArgumentError("spectral_overlap: need at least two grid points");
  std::vector<double> a(grid.size()), b(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    a[i] = sa.at(grid[i]);
    b[i] = sb.at(grid[i]);
  }
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double h = 0.5 * (grid[i] - grid[i - 1]);
    sab += h * (a[i - 1] * b[i - 1] + a[i] * b[i]);
    saa += h * (a[i - 1] * a[i - 1] + a[i] * a[i]);
    sbb += h * (b[i - 1] * b[i - 1] + b[i] * b[i]);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw ArgumentError("spectral_overlap: zero spectrum");
  return std::clamp(sab / std::sqrt(saa * sbb), 0.0, 1.0);
}

struct SearchStep {
  int iteration = 0;
  double x = 0.0;
  double value = 0.0;
};

struct SearchResult {
  double x = 0.0;
  double value = 0.0;
  std::vector<SearchStep> trace;
};

/// Golden-section minimization of a unimodal f on [lo, hi] down to a bracket
/// of width `tol`. Every evaluation stays inside [lo, hi] and is traced.
inline SearchResult golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(hi > lo) || !(tol > 0.0)) throw ArgumentError("golden_section_minimize: need lo < hi and tol > 0");
  constexpr double kInvPhi = 0.6180339887498949;
  SearchResult res;
  int it = 0;
  const auto eval = [&](double x) {
    const double v = f(x);
    res.trace.push_back({it, x, v});
    return v;
  };
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = eval(c), fd = eval(d);
  while (b - a > tol) {
    ++it;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = eval(d);
    }
  }
  // Best evaluated point; the endpoints are checked too since the minimum may sit on a bound.
  const double fa = eval(lo), fb = eval(hi);
  res.x = fc <= fd ? c : d;
  res.value = std::min(fc, fd);
  if (fa < res.value) {
    res.x = lo;
    res.value = fa;
  }
  if (fb < res.value) {
    res.x = hi;
    res.value = fb;
  }
  return res;
}

struct MatchResult {
  double air_gap_mm = 0.0;
  double achieved_lifetime_ps = 0.0;
  /// (iteration, gap_mm, lifetime_ps) per evaluation.
  std::vector<SearchStep> trace;
};

/// Air gap within `gap_bounds_mm` whose cavity lifetime finesse/(2 pi FSR)
/// equals `target_lifetime_ps`. Throws InfeasibleError carrying the
/// achievable lifetime range when the target lies outside it.
inline MatchResult match_cavity_length(double target_lifetime_ps, CavitySpec cavity, double wavelength_nm,
                                       double temperature_c, std::pair<double, double> gap_bounds_mm,
                                       double tol_mm = 1e-6) {
  const auto [lo, hi] = gap_bounds_mm;
  if (!(target_lifetime_ps > 0.0)) throw ArgumentError("match_cavity_length: target lifetime must be > 0");
  if (!(lo >= 0.0) || !(hi > lo)) throw ArgumentError("match_cavity_length: need 0 <= gap_min < gap_max");
  const auto lifetime = [&](double gap) {
    cavity.air_gap_mm = gap;
    return cavity_lifetime_ps(cavity, wavelength_nm, temperature_c);
  };
  const double t_lo = lifetime(lo), t_hi = lifetime(hi);
  if (target_lifetime_ps < t_lo || target_lifetime_ps > t_hi) {
    std::ostringstream os;
    os << "match_cavity_length: target lifetime " << target_lifetime_ps << " ps outside achievable range [" << t_lo
       << ", " << t_hi << "] ps for air gap in [" << lo << ", " << hi << "] mm";
    throw InfeasibleError(os.str(), t_lo, t_hi);
  }
  const auto search = golden_section_minimize([&](double g) { return std::abs(lifetime(g) - target_lifetime_ps); },
                                              lo, hi, tol_mm);
  MatchResult m;
  m.air_gap_mm = search.x;
  m.achieved_lifetime_ps = lifetime(search.x);
  m.trace.reserve(search.trace.size());
  for (const auto& s : search.trace) m.trace.push_back({s.iteration, s.x, lifetime(s.x)});
  return m;
}

struct OverlapReport {
  double temporal_overlap = 0.0;
  std::optional<double> spectral_overlap;
  double lifetime_spdc_ps = 0.0;
  double lifetime_target_ps = 0.0;
  double mismatch = 0.0;
};

inline OverlapReport overlap_report(double lifetime_spdc_ps, double lifetime_target_ps,
                                    MismatchConvention conv = MismatchConvention::reference) {
  OverlapReport r;
  r.lifetime_spdc_ps = lifetime_spdc_ps;
  r.lifetime_target_ps = lifetime_target_ps;
  r.temporal_overlap = temporal_overlap(lifetime_spdc_ps, lifetime_target_ps);
  r.mismatch = lifetime_mismatch(lifetime_spdc_ps, lifetime_target_ps, conv);
  return r;
}

}  // namespace spdclab

#endif  // SPDCLAB_MODEMATCH_HPP
