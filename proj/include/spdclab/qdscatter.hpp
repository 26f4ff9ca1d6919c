#ifndef SPDCLAB_QDSCATTER_HPP
#define SPDCLAB_QDSCATTER_HPP

// A single trion as a Stark-tunable linear scatterer probed by the filtered
// source spectrum. Everything is expressed in detuning from the spectrum's
// origin; the Stark slope only sets the bias axis.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "spdclab/core.hpp"
#include "spdclab/levmar.hpp"

namespace spdclab {

enum class LineShape { lorentzian, voigt };

struct QDSpec {
  double center_wavelength_nm = 941.84307;
  double lifetime_ps = 751.0;
  double broadened_fwhm_mhz = 730.0;
  double stark_slope_ghz_per_v = 10.0;
  double reference_bias_v = 0.5;
  LineShape lineshape = LineShape::lorentzian;

  double natural_fwhm_mhz() const { return 1e6 / (kTwoPi * lifetime_ps); }

  void validate() const {
    if (!(lifetime_ps > 0.0)) throw ArgumentError("qd: lifetime must be > 0");
    if (!(broadened_fwhm_mhz > 0.0)) throw ArgumentError("qd: broadened_fwhm must be > 0");
    if (broadened_fwhm_mhz < natural_fwhm_mhz()) {
      throw ArgumentError("qd: broadened_fwhm below the natural linewidth 1/(2 pi lifetime)");
    }
  }
};

namespace detail {

inline double lorentzian(double fwhm, double x) {
  const double h = 0.5 * fwhm;
  return h * h / (x * x + h * h);
}

/// Gaussian FWHM that, convolved with a Lorentzian of `fl`, gives a Voigt of
/// FWHM `fv` (Olivero-Longbothum approximation, ~0.02% accurate).
inline double voigt_gaussian_fwhm(double fv, double fl) {
  const double a = fv - 0.5346 * fl;
  const double g2 = a * a - 0.2166 * fl * fl;
  return g2 > 0.0 ? std::sqrt(g2) : 0.0;
}

/// Unnormalized Voigt profile by Simpson quadrature over the Gaussian.
inline double voigt_raw(double fl, double fg, double x) {
  if (fg <= 0.0) return lorentzian(fl, x);
  const double sigma = fg / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  constexpr int kPanels = 400;
  const double lim = 7.0 * sigma;
  const double h = 2.0 * lim / kPanels;
  double s = 0.0;
  for (int k = 0; k <= kPanels; ++k) {
    const double u = -lim + k * h;
    const double w = (k == 0 || k == kPanels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    s += w * std::exp(-0.5 * u * u / (sigma * sigma)) * lorentzian(fl, x - u);
  }
  return s;
}

}  // namespace detail

/// Scattering response at `detuning_ghz` from the QD line, peak 1 at zero.
inline double qd_lineshape(const QDSpec& qd, double detuning_ghz) {
  const double fwhm = qd.broadened_fwhm_mhz * 1e-3;
  if (!(fwhm > 0.0)) throw ArgumentError("qd_lineshape: broadened_fwhm must be > 0");
  if (qd.lineshape == LineShape::lorentzian) return detail::lorentzian(fwhm, detuning_ghz);
  const double fl = qd.natural_fwhm_mhz() * 1e-3;
  const double fg = detail::voigt_gaussian_fwhm(fwhm, fl);
  return detail::voigt_raw(fl, fg, detuning_ghz) / detail::voigt_raw(fl, fg, 0.0);
}

/// QD transition offset for a bias; lower bias means a higher frequency.
inline double stark_detuning(const QDSpec& qd, double bias_v) {
  return -qd.stark_slope_ghz_per_v * (bias_v - qd.reference_bias_v);
}

struct ScanSettings {
  double incident_rate_per_s = 60000.0;
  double collection_efficiency = 0.02;
  /// Scattering-strength calibration constant.
  double kappa = 0.1;
  double dark_rate_cps = 110.0;
  double integration_time_s = 600.0;

  void validate() const {
    if (!(incident_rate_per_s >= 0.0)) throw ArgumentError("scan: incident_rate must be >= 0");
    if (!(collection_efficiency >= 0.0 && collection_efficiency <= 1.0)) {
      throw ArgumentError("scan: collection_efficiency in [0,1]");
    }
    if (!(kappa >= 0.0)) throw ArgumentError("scan: kappa must be >= 0");
    if (!(dark_rate_cps >= 0.0)) throw ArgumentError("scan: dark_rate must be >= 0");
    if (!(integration_time_s > 0.0)) throw ArgumentError("scan: integration_time must be > 0");
  }
};

struct ScanResult {
  std::vector<double> biases_v;
  std::vector<double> detuning_ghz;
  std::vector<std::int64_t> counts;
  std::vector<std::int64_t> background;
  std::vector<double> expected;

  std::size_t size() const { return biases_v.size(); }
};

/// Bias scan of the QD across the source spectrum. Each bias point draws its
/// signal and dark-only background from its own generator, seeded from
/// (seed, point index).
inline ScanResult scattering_scan(const SpectralDensity& spectrum, const QDSpec& qd, std::span<const double> biases_v,
                                  const ScanSettings& settings, std::uint64_t seed, std::size_t threads = 1) {
  spectrum.validate();
  qd.validate();
  settings.validate();
  if (biases_v.empty()) throw ArgumentError("scattering_scan: empty bias grid");
  const SpectralDensity s = settings.kappa > 0.0 ? spectrum.normalized_to_area() : spectrum;

  ScanResult r;
  const std::size_t n = biases_v.size();
  r.biases_v.assign(biases_v.begin(), biases_v.end());
  r.detuning_ghz.resize(n);
  r.counts.resize(n);
  r.background.resize(n);
  r.expected.resize(n);
  const double dark = settings.dark_rate_cps * settings.integration_time_s;
  const double scale =
      settings.incident_rate_per_s * settings.collection_efficiency * settings.kappa * settings.integration_time_s;

  parallel_for(n, threads, [&](std::size_t i) {
    const double delta = stark_detuning(qd, biases_v[i]);
    double overlap = 0.0;
    if (scale > 0.0) {
      for (std::size_t j = 1; j < s.size(); ++j) {
        const double a = s.intensity[j - 1] * qd_lineshape(qd, s.detuning_ghz[j - 1] - delta);
        const double b = s.intensity[j] * qd_lineshape(qd, s.detuning_ghz[j] - delta);
        overlap += 0.5 * (a + b) * (s.detuning_ghz[j] - s.detuning_ghz[j - 1]);
      }
    }
    const double mu = scale * overlap + dark;
    std::mt19937_64 rng(mix_seed(seed, i));
    r.detuning_ghz[i] = delta;
    r.expected[i] = mu;
    r.counts[i] = mu > 0.0 ? std::poisson_distribution<std::int64_t>(mu)(rng) : 0;
    r.background[i] = dark > 0.0 ? std::poisson_distribution<std::int64_t>(dark)(rng) : 0;
  });
  return r;
}

struct DoublePeakFit {
  std::array<double, 2> centers_ghz{};
  std::array<double, 2> widths_fwhm_ghz{};
  std::array<double, 2> amplitudes{};
  double background = 0.0;
  double separation_ghz = 0.0;
  double separation_stderr_ghz = 0.0;
  /// Smaller over larger peak amplitude.
  double amplitude_ratio = 0.0;
};

namespace detail {

struct PeakCandidate {
  std::size_t index;
  double height;
};

}  // namespace detail

/// Two Lorentzians on a constant background, fitted in detuning units with
/// Poisson weights. Requires two local maxima that stand more than 3 sigma
/// above the background and above the valley between them.
inline DoublePeakFit fit_double_peak(const ScanResult& scan) {
  const std::size_t n = scan.size();
  if (n < 8 || scan.counts.size() != n || scan.detuning_ghz.size() != n) {
    throw FitError("fit_double_peak: scan too short or inconsistent");
  }
  // Work on increasing detuning.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scan.detuning_ghz[a] < scan.detuning_ghz[b]; });
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = scan.detuning_ghz[order[i]];
    y[i] = static_cast<double>(scan.counts[order[i]]);
  }

  double bg = 0.0;
  if (!scan.background.empty()) {
    for (auto b : scan.background) bg += static_cast<double>(b);
    bg /= static_cast<double>(scan.background.size());
  } else {
    bg = *std::min_element(y.begin(), y.end());
  }
  const auto sigma = [](double v) { return std::sqrt(std::max(v, 1.0)); };

  // 5-point moving average for candidate detection only.
  std::vector<double> sm(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= 2 ? i - 2 : 0, hi = std::min(n - 1, i + 2);
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += y[k];
    sm[i] = s / static_cast<double>(hi - lo + 1);
  }
  std::vector<detail::PeakCandidate> cand;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (sm[i] >= sm[i - 1] && sm[i] > sm[i + 1] && sm[i] - bg > 3.0 * sigma(bg)) cand.push_back({i, sm[i]});
  }
  std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.height > b.height; });
  std::optional<std::size_t> first, second;
  if (!cand.empty()) first = cand.front().index;
  for (std::size_t k = 1; first && k < cand.size() && !second; ++k) {
    const std::size_t j = cand[k].index;
    const auto [a, b] = std::minmax(*first, j);
    const double valley = *std::min_element(sm.begin() + static_cast<std::ptrdiff_t>(a),
                                            sm.begin() + static_cast<std::ptrdiff_t>(b) + 1);
    if (cand[k].height - valley > 3.0 * sigma(valley)) second = j;
  }
  if (!second) throw FitError("fit_double_peak: fewer than two significant peaks");
  const std::size_t i1 = std::min(*first, *second), i2 = std::max(*first, *second);

  const auto half_width = [&](std::size_t i) {
    const double half = bg + 0.5 * (sm[i] - bg);
    std::size_t l = i, r = i;
    while (l > 0 && sm[l] > half) --l;
    while (r + 1 < n && sm[r] > half) ++r;
    return std::max(x[r] - x[l], 2.0 * (x[1] - x[0]));
  };

  lm::Vector p0(7);
  p0 << bg, sm[i1] - bg, x[i1], half_width(i1), sm[i2] - bg, x[i2], half_width(i2);
  const lm::ModelFn fn = [&](const lm::Vector& p, lm::Vector& m, lm::Matrix& j) {
    m.resize(static_cast<Eigen::Index>(n));
    j.resize(static_cast<Eigen::Index>(n), 7);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      m(r) = p(0);
      j(r, 0) = 1.0;
      for (int k = 0; k < 2; ++k) {
        const double a = p(1 + 3 * k), c = p(2 + 3 * k), w = p(3 + 3 * k);
        const double d = x[i] - c, h2 = 0.25 * w * w;
        const double den = d * d + h2;
        const double l = h2 / den;
        m(r) += a * l;
        j(r, 1 + 3 * k) = l;
        j(r, 2 + 3 * k) = a * 2.0 * d * h2 / (den * den);
        j(r, 3 + 3 * k) = a * 0.5 * w * d * d / (den * den);
      }
    }
  };
  lm::Vector yv(static_cast<Eigen::Index>(n)), wv(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    yv(static_cast<Eigen::Index>(i)) = y[i];
    wv(static_cast<Eigen::Index>(i)) = 1.0 / std::max(y[i], 1.0);
  }
  const auto res = lm::solve(fn, yv, wv, p0);
  const auto& p = res.params;
  if (!p.allFinite()) throw FitError("fit_double_peak: fit diverged");

  DoublePeakFit f;
  f.background = p(0);
  for (int k = 0; k < 2; ++k) {
    f.amplitudes[static_cast<std::size_t>(k)] = p(1 + 3 * k);
    f.centers_ghz[static_cast<std::size_t>(k)] = p(2 + 3 * k);
    f.widths_fwhm_ghz[static_cast<std::size_t>(k)] = std::abs(p(3 + 3 * k));
  }
  if (!(f.amplitudes[0] > 0.0 && f.amplitudes[1] > 0.0)) throw FitError("fit_double_peak: non-positive peak amplitude");
  f.separation_ghz = std::abs(f.centers_ghz[1] - f.centers_ghz[0]);
  // Scale the covariance by the reduced chi2 so the error also holds for noiseless input.
  const double dof = static_cast<double>(n) - 7.0;
  const double s2 = std::max(res.chi2 / dof, 1.0);
  const double var = res.covariance(2, 2) + res.covariance(5, 5) - 2.0 * res.covariance(2, 5);
  f.separation_stderr_ghz = std::sqrt(std::max(var, 0.0) * s2);
  f.amplitude_ratio = std::min(f.amplitudes[0], f.amplitudes[1]) / std::max(f.amplitudes[0], f.amplitudes[1]);
  return f;
}

}  // namespace spdclab

#endif  // SPDCLAB_QDSCATTER_HPP
