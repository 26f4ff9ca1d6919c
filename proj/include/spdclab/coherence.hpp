#ifndef SPDCLAB_COHERENCE_HPP
#define SPDCLAB_COHERENCE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "spdclab/core.hpp"

namespace spdclab {

/// |g1| (fringe visibility) sampled on a delay grid in ps.
struct CoherenceTrace {
  std::vector<double> delays_ps;
  std::vector<double> visibility;

  std::size_t size() const { return delays_ps.size(); }
};

/// Delay grid 0..max_ps: `fine_step` up to `fine_limit`, `coarse_step` beyond.
inline std::vector<double> two_resolution_delays(double max_ps, double fine_limit_ps, double fine_step_ps,
                                                 double coarse_step_ps) {
  if (!(fine_step_ps > 0.0) || !(coarse_step_ps > 0.0) || !(max_ps > 0.0) || fine_limit_ps < 0.0) {
    throw ArgumentError("two_resolution_delays: steps and range must be positive");
  }
  std::vector<double> d = uniform_grid(0.0, std::min(fine_limit_ps, max_ps), fine_step_ps);
  const double start = d.back();
  const auto n = static_cast<std::size_t>(std::floor((max_ps - start) / coarse_step_ps + 1e-9));
  for (std::size_t i = 1; i <= n; ++i) d.push_back(start + static_cast<double>(i) * coarse_step_ps);
  return d;
}

/// |g1(tau)| = |sum S(nu) exp(i 2 pi nu tau)| / sum S(nu), with trapezoid weights
/// on the spectral grid. A direct sum, so any delay grid works.
inline CoherenceTrace g1_from_spectrum(const SpectralDensity& spectrum, std::span<const double> delays_ps,
                                       std::size_t threads = 1) {
  spectrum.validate();
  const std::size_t n = spectrum.size();
  std::vector<double> w(n, 0.0);
  if (n == 1) {
    w[0] = spectrum.intensity[0];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double left = i > 0 ? spectrum.detuning_ghz[i] - spectrum.detuning_ghz[i - 1] : 0.0;
      const double right = i + 1 < n ? spectrum.detuning_ghz[i + 1] - spectrum.detuning_ghz[i] : 0.0;
      w[i] = 0.5 * (left + right) * spectrum.intensity[i];
    }
  }
  double total = 0.0;
  for (double v : w) total += v;
  if (!(total > 0.0)) throw ArgumentError("g1_from_spectrum: spectrum integrates to zero");

  // A uniform grid lets each delay use a rotating phasor instead of sin/cos per sample.
  bool uniform = n > 2;
  const double step = n > 1 ? spectrum.detuning_ghz[1] - spectrum.detuning_ghz[0] : 0.0;
  for (std::size_t i = 2; uniform && i < n; ++i) {
    uniform = std::abs(spectrum.detuning_ghz[i] - spectrum.detuning_ghz[i - 1] - step) < 1e-9 * std::abs(step) + 1e-12;
  }

  CoherenceTrace tr;
  tr.delays_ps.assign(delays_ps.begin(), delays_ps.end());
  tr.visibility.assign(delays_ps.size(), 0.0);
  parallel_for(delays_ps.size(), threads, [&](std::size_t k) {
    const double tau = delays_ps[k];
    if (tau == 0.0) {
      tr.visibility[k] = 1.0;
      return;
    }
    const double scale = kTwoPi * tau * 1e-3;  // GHz * ps -> cycles * 1e-3
    std::complex<double> acc{0.0, 0.0};
    if (uniform) {
      constexpr std::size_t kReset = 512;
      const std::complex<double> rot = std::polar(1.0, scale * step);
      std::complex<double> z;
      for (std::size_t i = 0; i < n; ++i) {
        if (i % kReset == 0) z = std::polar(1.0, scale * spectrum.detuning_ghz[i]);
        acc += w[i] * z;
        z *= rot;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) acc += w[i] * std::polar(1.0, scale * spectrum.detuning_ghz[i]);
    }
    tr.visibility[k] = std::min(1.0, std::abs(acc) / total);
  });
  return tr;
}

/// Fringe visibility (I_max - I_min) / (I_max + I_min).
inline double visibility(double i_max, double i_min) {
  if (i_min < 0.0 || i_max < i_min) throw ArgumentError("visibility: need i_max >= i_min >= 0");
  if (!(i_max > 0.0)) throw ArgumentError("visibility: i_max and i_min are both zero");
  return (i_max - i_min) / (i_max + i_min);
}

/// Local maxima above `min_value`, thinned greedily (tallest first) so that
/// accepted peaks are at least `min_separation_ps` apart. Returned in delay order.
inline std::vector<std::size_t> find_revival_peaks(const CoherenceTrace& tr, double min_value, double min_separation_ps) {
  std::vector<std::size_t> cand;
  const std::size_t n = tr.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = tr.visibility[i];
    if (v <= min_value) continue;
    const bool left_ok = i == 0 || v >= tr.visibility[i - 1];
    const bool right_ok = i + 1 == n || v > tr.visibility[i + 1];
    if (left_ok && right_ok) cand.push_back(i);
  }
  std::stable_sort(cand.begin(), cand.end(),
                   [&](std::size_t a, std::size_t b) { return tr.visibility[a] > tr.visibility[b]; });
  std::vector<std::size_t> kept;
  for (std::size_t c : cand) {
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return std::abs(tr.delays_ps[k] - tr.delays_ps[c]) >= min_separation_ps;
    });
    if (clear) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

struct RevivalFit {
  double coherence_time_ps = 0.0;
  std::vector<double> peak_delays_ps;
  std::vector<double> peak_values;
  double mean_spacing_ps = 0.0;
};

namespace detail {

/// Slope and intercept of the least-squares line through (x, y).
inline std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace detail

/// Revival peaks of a comb-like trace and the 1/e time of an exponential fit to
/// their maxima. `revival_period_ps` (1/FSR) sets the peak separation of
/// 0.5 * period; without it the first revival after the central peak is used.
inline RevivalFit fit_revivals(const CoherenceTrace& tr, std::optional<double> revival_period_ps = std::nullopt) {
  if (tr.size() < 3 || tr.size() != tr.visibility.size()) throw FitError("coherence trace too short");
  const auto [mn, mx] = std::minmax_element(tr.visibility.begin(), tr.visibility.end());
  if (*mx - *mn < 1e-9) throw FitError("no decay: coherence trace is flat");
  constexpr double kFloor = 0.01;

  double period = 0.0;
  if (revival_period_ps) {
    period = *revival_period_ps;
  } else {
    std::size_t i = 0;
    while (i < tr.size() && tr.visibility[i] >= kFloor) ++i;
    if (i == tr.size()) throw FitError("no decay: trace never drops below 1% visibility");
    for (; i + 1 < tr.size(); ++i) {
      const double v = tr.visibility[i];
      if (v > kFloor && v >= tr.visibility[i - 1] && v > tr.visibility[i + 1]) break;
    }
    if (i + 1 >= tr.size()) throw FitError("too few revival peaks: no revival after the central peak");
    period = tr.delays_ps[i] - tr.delays_ps.front();
  }
  if (!(period > 0.0)) throw FitError("revival period must be positive");

  const auto idx = find_revival_peaks(tr, kFloor, 0.5 * period);
  if (idx.size() < 3) throw FitError("too few revival peaks for an envelope fit (need >= 3)");
  RevivalFit fit;
  std::vector<double> logs;
  for (std::size_t i : idx) {
    fit.peak_delays_ps.push_back(tr.delays_ps[i]);
    fit.peak_values.push_back(tr.visibility[i]);
    logs.push_back(std::log(tr.visibility[i]));
  }
  const auto [slope, icpt] = detail::linear_fit(fit.peak_delays_ps, logs);
  (void)icpt;
  if (!(slope < 0.0)) throw FitError("no decay: revival envelope does not decrease");
  fit.coherence_time_ps = -1.0 / slope;
  fit.mean_spacing_ps =
      (fit.peak_delays_ps.back() - fit.peak_delays_ps.front()) / static_cast<double>(fit.peak_delays_ps.size() - 1);
  return fit;
}

inline double coherence_time(const CoherenceTrace& tr, std::optional<double> revival_period_ps = std::nullopt) {
  return fit_revivals(tr, revival_period_ps).coherence_time_ps;
}

/// Decay time of the central peak: log-linear exponential fit to the initial
/// decay (samples from tau = 0 while |g1| >= 0.8). Needs >= 3 such samples and a
/// delay step <= 0.2 ps there.
inline double central_peak_width(const CoherenceTrace& tr) {
  const auto it = std::find_if(tr.delays_ps.begin(), tr.delays_ps.end(), [](double d) { return d >= 0.0; });
  if (it == tr.delays_ps.end()) throw ResolutionError("central_peak_width: no samples at tau >= 0");
  const auto start = static_cast<std::size_t>(it - tr.delays_ps.begin());
  const double v0 = tr.visibility[start];
  std::vector<double> x, y;
  for (std::size_t i = start; i < tr.size() && tr.visibility[i] >= 0.8 * v0; ++i) {
    if (i > start && tr.delays_ps[i] - tr.delays_ps[i - 1] > 0.2 + 1e-12) {
      throw ResolutionError("central_peak_width: delay step exceeds 0.2 ps near zero delay");
    }
    x.push_back(tr.delays_ps[i]);
    y.push_back(std::log(tr.visibility[i]));
  }
  if (x.size() < 3) throw ResolutionError("central_peak_width: fewer than 3 samples resolve the central peak");
  const auto [slope, icpt] = detail::linear_fit(x, y);
  (void)icpt;
  if (!(slope < 0.0)) throw FitError("central_peak_width: central peak does not decay");
  return -1.0 / slope;
}

}  // namespace spdclab

#endif  // SPDCLAB_COHERENCE_HPP
