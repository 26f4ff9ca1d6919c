#ifndef SPDCLAB_PHOTOSTAT_HPP
#define SPDCLAB_PHOTOSTAT_HPP

// Pulsed pair generation with a heralded Hanbury Brown-Twiss measurement:
// detector 1 heralds on the idler, detectors 2 and 3 sit behind a beam
// splitter on the signal arm. All detectors are threshold (click / no click)
// and every photon of a pulse falls inside one coincidence window.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spdclab/core.hpp"

namespace spdclab {

enum class PairDistribution {
  poissonian,   // many-mode limit
  thermal,      // negative binomial over `schmidt_modes` modes (1: single-mode thermal)
  single_pair,  // exactly one pair every pulse
};

enum class Emission {
  pairs,     // signal and idler photon numbers are equal
  coherent,  // independent Poissonian signal and herald beams (classical benchmark)
};

inline std::string_view to_string(PairDistribution d) {
  switch (d) {
    case PairDistribution::poissonian: return "poissonian";
    case PairDistribution::thermal: return "thermal";
    case PairDistribution::single_pair: return "single_pair";
  }
  return "?";
}

inline PairDistribution parse_pair_distribution(std::string_view s) {
  if (s == "poissonian") return PairDistribution::poissonian;
  if (s == "thermal") return PairDistribution::thermal;
  if (s == "single_pair") return PairDistribution::single_pair;
  throw ArgumentError("unknown pair distribution '" + std::string(s) + "'");
}

struct SourceStatModel {
  /// Mean pairs per pulse per mW of pump power (mu = alpha * P).
  double alpha_per_mw = 0.0;
  PairDistribution distribution = PairDistribution::poissonian;
  int schmidt_modes = 1;
  Emission emission = Emission::pairs;

  double mean_pairs(double power_mw) const { return alpha_per_mw * power_mw; }

  void validate() const {
    if (!(alpha_per_mw >= 0.0)) throw ArgumentError("source: alpha_per_mW must be >= 0");
    if (schmidt_modes < 1) throw ArgumentError("source: schmidt_modes must be >= 1");
  }
};

struct DetectorSpec {
  double efficiency = 0.5;
  double dark_count_rate_cps = 110.0;
  double coincidence_window_ns = 3.0;

  /// Probability of a dark click inside one coincidence window.
  double dark_probability() const { return dark_count_rate_cps * coincidence_window_ns * 1e-9; }

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw ArgumentError("detector efficiency in [0,1]");
    if (!(dark_count_rate_cps >= 0.0)) throw ArgumentError("detector dark count rate must be >= 0");
    if (!(coincidence_window_ns >= 0.0)) throw ArgumentError("coincidence window must be >= 0");
    if (dark_probability() > 1.0) throw ArgumentError("dark count probability per window exceeds 1");
  }
};

/// Herald detector plus the two HBT detectors and the splitter transmission.
struct DetectorSet {
  DetectorSpec idler;
  DetectorSpec transmitted;
  DetectorSpec reflected;
  double splitter_t = 0.5;

  void validate() const {
    idler.validate();
    transmitted.validate();
    reflected.validate();
    if (!(splitter_t >= 0.0 && splitter_t <= 1.0)) throw ArgumentError("splitter transmission in [0,1]");
  }
};

struct CountsRecord {
  std::uint64_t n1 = 0;
  std::uint64_t n12 = 0;
  std::uint64_t n13 = 0;
  std::uint64_t n123 = 0;
  std::uint64_t pulses = 0;

  CountsRecord& operator+=(const CountsRecord& o) {
    n1 += o.n1;
    n12 += o.n12;
    n13 += o.n13;
    n123 += o.n123;
    pulses += o.pulses;
    return *this;
  }
  friend bool operator==(const CountsRecord&, const CountsRecord&) = default;
};

inline constexpr std::uint64_t kPulsesPerBlock = 1u << 16;

namespace detail {

class PhotonSampler {
 public:
  PhotonSampler(const SourceStatModel& model, double mu) : model_(model), mu_(mu) {
    if (model.distribution == PairDistribution::poissonian || model.emission == Emission::coherent) {
      poisson_.emplace(mu);
    } else if (model.distribution == PairDistribution::thermal) {
      const double k = model.schmidt_modes;
      negbin_.emplace(model.schmidt_modes, 1.0 / (1.0 + mu / k));
    }
  }

  template <class Rng>
  int draw(Rng& rng) {
    if (mu_ <= 0.0 && model_.distribution != PairDistribution::single_pair) return 0;
    if (poisson_) return (*poisson_)(rng);
    if (negbin_) return (*negbin_)(rng);
    return 1;
  }

 private:
  const SourceStatModel& model_;
  double mu_;
  std::optional<std::poisson_distribution<int>> poisson_;
  std::optional<std::negative_binomial_distribution<int>> negbin_;
};

template <class Rng>
CountsRecord simulate_block(const SourceStatModel& model, double mu, const DetectorSet& det, std::uint64_t pulses,
                            Rng& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  PhotonSampler signal_sampler(model, mu);
  PhotonSampler herald_sampler(model, mu);
  const double d1 = det.idler.dark_probability();
  const double d2 = det.transmitted.dark_probability();
  const double d3 = det.reflected.dark_probability();
  const double p2 = det.splitter_t * det.transmitted.efficiency;
  const double p3 = (1.0 - det.splitter_t) * det.reflected.efficiency;
  const double miss_i = 1.0 - det.idler.efficiency;

  CountsRecord rec;
  rec.pulses = pulses;
  for (std::uint64_t k = 0; k < pulses; ++k) {
    const int m = signal_sampler.draw(rng);
    const int m_idler = model.emission == Emission::pairs ? m : herald_sampler.draw(rng);
    bool herald = false;
    if (m_idler > 0) herald = uni(rng) >= std::pow(miss_i, m_idler);
    if (!herald && d1 > 0.0) herald = uni(rng) < d1;
    if (!herald) continue;
    bool c2 = false, c3 = false;
    for (int j = 0; j < m; ++j) {
      const double u = uni(rng);
      if (u < p2) {
        c2 = true;
      } else if (u < p2 + p3) {
        c3 = true;
      }
    }
    if (!c2 && d2 > 0.0) c2 = uni(rng) < d2;
    if (!c3 && d3 > 0.0) c3 = uni(rng) < d3;
    ++rec.n1;
    if (c2) ++rec.n12;
    if (c3) ++rec.n13;
    if (c2 && c3) ++rec.n123;
  }
  return rec;
}

}  // namespace detail

/// Monte-Carlo tallies for `pulses` pump pulses at `power_mw`.
///
/// Pulses are split into fixed blocks of kPulsesPerBlock, each with its own
/// generator seeded from (seed, block index), so the record depends only on
/// (seed, pulses, parameters) and not on `threads`.
inline CountsRecord simulate_counts(const SourceStatModel& model, double power_mw, const DetectorSet& det,
                                    std::uint64_t pulses, std::uint64_t seed, std::size_t threads = 1) {
  model.validate();
  det.validate();
  if (pulses < 1) throw ArgumentError("simulate_counts: pulses must be >= 1");
  const double mu = model.mean_pairs(power_mw);
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ArgumentError("simulate_counts: mean pair number must be >= 0");

  const std::uint64_t blocks = (pulses + kPulsesPerBlock - 1) / kPulsesPerBlock;
  std::vector<CountsRecord> parts(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::uint64_t first = b * kPulsesPerBlock;
    const std::uint64_t count = std::min(kPulsesPerBlock, pulses - first);
    std::mt19937_64 rng(mix_seed(seed, b));
    parts[b] = detail::simulate_block(model, mu, det, count, rng);
  });
  CountsRecord total;
  for (const auto& p : parts) total += p;
  return total;
}

inline std::string describe(const CountsRecord& c) {
  std::ostringstream os;
  os << "N1=" << c.n1 << " N12=" << c.n12 << " N13=" << c.n13 << " N123=" << c.n123 << " pulses=" << c.pulses;
  return os.str();
}

/// Heralded g3 = N1 N123 / (N12 N13).
inline double g3_heralded(const CountsRecord& c) {
  if (c.n12 == 0 || c.n13 == 0) {
    throw InsufficientStatistics("g3: insufficient statistics (" + describe(c) + ")", c.n1, c.n12, c.n13, c.n123);
  }
  return static_cast<double>(c.n1) * static_cast<double>(c.n123) /
         (static_cast<double>(c.n12) * static_cast<double>(c.n13));
}

/// Delta-method standard error of g3 from the four disjoint heralded outcome
/// counts (both, only 2, only 3, neither) treated as independent Poisson.
inline double g3_stderr(const CountsRecord& c) {
  const double g = g3_heralded(c);
  if (c.n123 == 0) {
    // One expected triple as the scale of the zero-count uncertainty.
    return static_cast<double>(c.n1) / (static_cast<double>(c.n12) * static_cast<double>(c.n13));
  }
  const double n1 = static_cast<double>(c.n1), n12 = static_cast<double>(c.n12), n13 = static_cast<double>(c.n13);
  const double x = static_cast<double>(c.n123);
  const double a = n12 - x, b = n13 - x, rest = n1 - n12 - n13 + x;
  const double dx = 1.0 / n1 + 1.0 / x - 1.0 / n12 - 1.0 / n13;
  const double da = 1.0 / n1 - 1.0 / n12;
  const double db = 1.0 / n1 - 1.0 / n13;
  const double dc = 1.0 / n1;
  const double var_log = dx * dx * x + da * da * a + db * db * b + dc * dc * rest;
  return g * std::sqrt(var_log);
}

/// Expected tallies per pulse.
struct ExpectedTallies {
  double e1 = 0.0, e12 = 0.0, e13 = 0.0, e123 = 0.0;

  double g3() const {
    if (!(e12 > 0.0) || !(e13 > 0.0)) {
      throw InsufficientStatistics("g3: expected double coincidences vanish; g3 undefined", 0, 0, 0, 0);
    }
    return e1 * e123 / (e12 * e13);
  }
};

namespace detail {

/// Photon-number probabilities P(0..cutoff) and the tail mass beyond.
inline std::vector<double> number_distribution(const SourceStatModel& model, double mu, int cutoff, bool force_poisson,
                                               double& tail) {
  std::vector<double> p(static_cast<std::size_t>(cutoff) + 1, 0.0);
  if (model.distribution == PairDistribution::single_pair && !force_poisson) {
    if (cutoff >= 1) p[1] = 1.0;
    tail = cutoff >= 1 ? 0.0 : 1.0;
    return p;
  }
  if (mu <= 0.0) {
    p[0] = 1.0;
    tail = 0.0;
    return p;
  }
  if (model.distribution == PairDistribution::poissonian || force_poisson) {
    double log_p = -mu;
    for (int m = 0; m <= cutoff; ++m) {
      if (m > 0) log_p += std::log(mu) - std::log(static_cast<double>(m));
      p[static_cast<std::size_t>(m)] = std::exp(log_p);
    }
  } else {
    const double k = model.schmidt_modes;
    const double q = (mu / k) / (1.0 + mu / k);
    double log_p = k * std::log(1.0 - q);
    for (int m = 0; m <= cutoff; ++m) {
      if (m > 0) log_p += std::log((m + k - 1.0) / m) + std::log(q);
      p[static_cast<std::size_t>(m)] = std::exp(log_p);
    }
  }
  double s = 0.0;
  for (double v : p) s += v;
  tail = std::max(0.0, 1.0 - s);
  return p;
}

}  // namespace detail

/// Exact expected tallies by summing over photon numbers 0..m_cutoff and all
/// click outcomes. Throws when the distribution's tail beyond the cutoff
/// exceeds 1e-12.
inline ExpectedTallies g3_enumerate(const SourceStatModel& model, double power_mw, const DetectorSet& det,
                                    int m_cutoff) {
  model.validate();
  det.validate();
  if (m_cutoff < 1) throw ArgumentError("g3_enumerate: m_cutoff must be >= 1");
  const double mu = model.mean_pairs(power_mw);
  const bool coherent = model.emission == Emission::coherent;
  double tail = 0.0;
  const auto pm = detail::number_distribution(model, mu, m_cutoff, coherent, tail);
  if (tail > 1e-12) {
    std::ostringstream os;
    os << "g3_enumerate: tail probability " << tail << " beyond m_cutoff = " << m_cutoff << " exceeds 1e-12";
    throw ArgumentError(os.str());
  }
  const double d1 = det.idler.dark_probability();
  const double d2 = det.transmitted.dark_probability();
  const double d3 = det.reflected.dark_probability();
  const double p2 = det.splitter_t * det.transmitted.efficiency;
  const double p3 = (1.0 - det.splitter_t) * det.reflected.efficiency;
  const double miss_i = 1.0 - det.idler.efficiency;

  // Click probabilities as -expm1(log P(no click)): dark probabilities are
  // ~1e-7, and 1 - (1 - d) loses most of its digits otherwise.
  const auto click = [](int m, double p, double log_no_dark) {
    const double lg = (m > 0 ? m * std::log1p(-p) : 0.0) + log_no_dark;
    return -std::expm1(lg);
  };
  const double ld1 = std::log1p(-d1), ld2 = std::log1p(-d2), ld3 = std::log1p(-d3);
  const auto herald = [&](int m) { return click(m, 1.0 - miss_i, ld1); };
  const auto c2 = [&](int m) { return click(m, p2, ld2); };
  const auto c3 = [&](int m) { return click(m, p3, ld3); };
  const auto both = [&](int m) {
    // 1 - a(1-d2) - b(1-d3) + c(1-d2)(1-d3), regrouped so the dark-only part is exact.
    const double a = std::pow(1.0 - p2, m), b = std::pow(1.0 - p3, m), c = std::pow(1.0 - p2 - p3, m);
    return (1.0 - a - b + c) + d2 * (a - c) + d3 * (b - c) + c * d2 * d3;
  };

  ExpectedTallies e;
  if (!coherent) {
    for (int m = 0; m <= m_cutoff; ++m) {
      const double w = pm[static_cast<std::size_t>(m)] * herald(m);
      e.e1 += w;
      e.e12 += w * c2(m);
      e.e13 += w * c3(m);
      e.e123 += w * both(m);
    }
    return e;
  }
  double ph = 0.0, s2 = 0.0, s3 = 0.0, s23 = 0.0;
  for (int m = 0; m <= m_cutoff; ++m) {
    const double w = pm[static_cast<std::size_t>(m)];
    ph += w * herald(m);
    s2 += w * c2(m);
    s3 += w * c3(m);
    s23 += w * both(m);
  }
  e.e1 = ph;
  e.e12 = ph * s2;
  e.e13 = ph * s3;
  e.e123 = ph * s23;
  return e;
}

struct SweepPoint {
  double power_mw = 0.0;
  double g3 = 0.0;
  double stderr_g3 = 0.0;
  CountsRecord counts;
};

/// Monte-Carlo g3 at each power; point i uses seed mix_seed(seed, i).
inline std::vector<SweepPoint> g3_power_sweep(const SourceStatModel& model, const DetectorSet& det,
                                              const std::vector<double>& powers_mw, std::uint64_t pulses_per_point,
                                              std::uint64_t seed, std::size_t threads = 1) {
  if (powers_mw.empty()) throw ArgumentError("g3_power_sweep: no powers given");
  std::vector<SweepPoint> out;
  out.reserve(powers_mw.size());
  for (std::size_t i = 0; i < powers_mw.size(); ++i) {
    SweepPoint pt;
    pt.power_mw = powers_mw[i];
    pt.counts = simulate_counts(model, pt.power_mw, det, pulses_per_point, mix_seed(seed, i), threads);
    pt.g3 = g3_heralded(pt.counts);
    pt.stderr_g3 = g3_stderr(pt.counts);
    out.push_back(pt);
  }
  return out;
}

/// Linear pair-rate coefficient alpha (per mW) that gives `target_g3` at
/// `power_mw`, by bisection on the exact enumeration.
inline double calibrate_alpha(SourceStatModel model, const DetectorSet& det, double power_mw, double target_g3,
                              int m_cutoff = 60) {
  if (!(power_mw > 0.0) || !(target_g3 > 0.0)) throw ArgumentError("calibrate_alpha: power and target must be > 0");
  const auto g3_at = [&](double alpha) {
    model.alpha_per_mw = alpha;
    return g3_enumerate(model, power_mw, det, m_cutoff).g3();
  };
  double lo = 1e-6 / power_mw, hi = 2.0 / power_mw;
  if (g3_at(lo) > target_g3 || g3_at(hi) < target_g3) {
    throw RootNotFoundError("calibrate_alpha: target g3 not bracketed");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g3_at(mid) < target_g3 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace spdclab

#endif  // SPDCLAB_PHOTOSTAT_HPP
