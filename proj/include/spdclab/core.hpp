#ifndef SPDCLAB_CORE_HPP
#define SPDCLAB_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace spdclab {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr const char* kVersion = "0.3.1";

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}

  const std::string& param_path() const { return param_path_; }
  void set_param_path(std::string path) { param_path_ = std::move(path); }

 private:
  std::string param_path_;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class RootNotFoundError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

/// Sampling too coarse for the requested estimate.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double achievable_min, double achievable_max)
      : Error(what), min_(achievable_min), max_(achievable_max) {}

  double achievable_min() const { return min_; }
  double achievable_max() const { return max_; }

 private:
  double min_;
  double max_;
};

class InsufficientStatistics : public Error {
 public:
  InsufficientStatistics(const std::string& what, std::uint64_t n1, std::uint64_t n12,
                         std::uint64_t n13, std::uint64_t n123)
      : Error(what), n1(n1), n12(n12), n13(n13), n123(n123) {}

  std::uint64_t n1, n12, n13, n123;
};

// ---------------------------------------------------------------------------
// Unit helpers
// ---------------------------------------------------------------------------

/// Optical frequency in GHz for a vacuum wavelength in nm.
inline double frequency_ghz(double wavelength_nm) { return kSpeedOfLight / wavelength_nm; }

/// Vacuum wavelength in nm for an optical frequency in GHz.
inline double wavelength_nm(double frequency_ghz) { return kSpeedOfLight / frequency_ghz; }

// ---------------------------------------------------------------------------
// Grids and sampled spectra
// ---------------------------------------------------------------------------

/// Inclusive uniform grid from `lo` to `hi`. The last point is snapped to `hi`
/// when the span is an integer number of steps (to 1e-9 relative).
inline std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) {
    throw ArgumentError("uniform_grid: need hi >= lo and step > 0");
  }
  const double span = (hi - lo) / step;
  const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = lo + static_cast<double>(i) * step;
  if (std::abs(grid.back() - hi) < 1e-9 * std::max(1.0, std::abs(hi))) grid.back() = hi;
  return grid;
}

/// Grid symmetric about zero: -half_span .. +half_span with the given step.
inline std::vector<double> symmetric_grid(double half_span, double step) {
  if (!(half_span > 0.0) || !(step > 0.0)) {
    throw ArgumentError("symmetric_grid: half_span and step must be positive");
  }
  const auto half = static_cast<std::size_t>(std::floor(half_span / step + 1e-9));
  std::vector<double> grid(2 * half + 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = (static_cast<double>(i) - static_cast<double>(half)) * step;
  }
  return grid;
}

inline bool strictly_increasing(std::span<const double> xs) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) return false;
  }
  return true;
}

/// Sampled, non-negative spectral intensity over a detuning grid (GHz).
struct SpectralDensity {
  std::vector<double> detuning_ghz;
  std::vector<double> intensity;

  std::size_t size() const { return detuning_ghz.size(); }
  bool empty() const { return detuning_ghz.empty(); }

  void validate() const {
    if (detuning_ghz.empty()) throw ArgumentError("spectral density: empty grid");
    if (detuning_ghz.size() != intensity.size()) {
      throw ArgumentError("spectral density: grid and intensity sizes differ");
    }
    if (!strictly_increasing(detuning_ghz)) {
      throw ArgumentError("spectral density: grid must be strictly increasing");
    }
    for (double v : intensity) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ArgumentError("spectral density: intensity must be finite and non-negative");
      }
    }
  }

  double peak() const {
    return intensity.empty() ? 0.0 : *std::max_element(intensity.begin(), intensity.end());
  }

  /// Trapezoid integral over the grid.
  double area() const {
    double s = 0.0;
    for (std::size_t i = 1; i < size(); ++i) {
      s += 0.5 * (intensity[i] + intensity[i - 1]) * (detuning_ghz[i] - detuning_ghz[i - 1]);
    }
    return s;
  }

  /// Largest grid spacing (0 for fewer than two points).
  double max_step() const {
    double m = 0.0;
    for (std::size_t i = 1; i < size(); ++i) m = std::max(m, detuning_ghz[i] - detuning_ghz[i - 1]);
    return m;
  }

  SpectralDensity normalized_to_peak() const {
    const double p = peak();
    if (!(p > 0.0)) throw ArgumentError("spectral density: cannot normalize an all-zero spectrum");
    SpectralDensity out = *this;
    for (double& v : out.intensity) v /= p;
    return out;
  }

  SpectralDensity normalized_to_area() const {
    const double a = area();
    if (!(a > 0.0)) throw ArgumentError("spectral density: cannot normalize an all-zero spectrum");
    SpectralDensity out = *this;
    for (double& v : out.intensity) v /= a;
    return out;
  }

  /// Linear interpolation, zero outside the grid.
  double at(double detuning) const {
    if (empty() || detuning < detuning_ghz.front() || detuning > detuning_ghz.back()) return 0.0;
    const auto it = std::upper_bound(detuning_ghz.begin(), detuning_ghz.end(), detuning);
    if (it == detuning_ghz.end()) return intensity.back();
    const auto hi = static_cast<std::size_t>(it - detuning_ghz.begin());
    const std::size_t lo = hi - 1;
    const double f = (detuning - detuning_ghz[lo]) / (detuning_ghz[hi] - detuning_ghz[lo]);
    return intensity[lo] + f * (intensity[hi] - intensity[lo]);
  }
};

/// Full width at half maximum of the peak containing the global maximum,
/// with linear interpolation of the two half-max crossings.
inline double numeric_fwhm(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw ArgumentError("numeric_fwhm: need >= 3 samples");
  const auto ipk = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double half = 0.5 * y[ipk];
  if (!(half > 0.0)) throw ArgumentError("numeric_fwhm: all-zero curve");
  std::size_t l = ipk;
  while (l > 0 && y[l - 1] > half) --l;
  std::size_t r = ipk;
  while (r + 1 < y.size() && y[r + 1] > half) ++r;
  if (l == 0 || r + 1 == y.size()) throw RangeError("numeric_fwhm: half maximum not reached inside the grid");
  const auto cross = [&](std::size_t a, std::size_t b) {
    return x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
  };
  return cross(r, r + 1) - cross(l - 1, l);
}

// ---------------------------------------------------------------------------
// Parallel helpers
// ---------------------------------------------------------------------------

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// processed exactly once; results must be written to per-index slots so the
/// outcome does not depend on the worker count.
template <class Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> failures(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) body(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

/// SplitMix64 finalizer; used to derive independent generator seeds from a
/// master seed and a stream index.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace spdclab

#endif  // SPDCLAB_CORE_HPP
