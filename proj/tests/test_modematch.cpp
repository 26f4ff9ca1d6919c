#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spdclab/modematch.hpp"
#include "support.hpp"

using namespace spdclab;

namespace {

constexpr double kOverlap751_932 = 0.9884338474041735;

// Simpson quadrature of the amplitude overlap, independent of the closed form.
double overlap_quadrature(double ta, double tb) {
  const double ga = 1.0 / ta, gb = 1.0 / tb;
  const double t_end = 80.0 / (ga + gb);
  constexpr int kPanels = 200000;
  const double h = t_end / kPanels;
  double s = 0.0;
  for (int k = 0; k <= kPanels; ++k) {
    const double w = (k == 0 || k == kPanels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    s += w * std::sqrt(ga * gb) * std::exp(-0.5 * (ga + gb) * k * h);
  }
  s *= h / 3.0;
  return s * s;
}

SpectralDensity lorentzian(double center, double fwhm, const std::vector<double>& grid) {
  SpectralDensity s;
  s.detuning_ghz = grid;
  const double h = 0.5 * fwhm;
  for (double d : grid) s.intensity.push_back(h * h / ((d - center) * (d - center) + h * h));
  return s;
}

}  // namespace

TEST(ModeMatch, ClosedFormReferenceValues) {
  EXPECT_NEAR(temporal_overlap(751.0, 932.0), kOverlap751_932, 1e-14);
  EXPECT_NEAR(temporal_overlap(100.0, 200.0), 8.0 / 9.0, 1e-15);
  EXPECT_DOUBLE_EQ(temporal_overlap(500.0, 500.0), 1.0);
  EXPECT_DOUBLE_EQ(temporal_overlap(300.0, 700.0), temporal_overlap(700.0, 300.0));
  EXPECT_THROW(temporal_overlap(0.0, 1.0), ArgumentError);
}

TEST(ModeMatch, ClosedFormMatchesQuadrature) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> tau(10.0, 5000.0);
  for (int i = 0; i < 100; ++i) {
    const double a = tau(rng), b = tau(rng);
    EXPECT_LT(std::abs(temporal_overlap(a, b) - overlap_quadrature(a, b)), 1e-9) << a << " " << b;
  }
}

TEST(ModeMatch, ProfileOverlapMatchesClosedForm) {
  WavepacketParams a{751.0, std::nullopt, 0.0, 0.0, 1.0};
  WavepacketParams b{932.0, std::nullopt, 0.0, 0.0, 1.0};
  EXPECT_NEAR(temporal_overlap_with_beat(a, b), kOverlap751_932, 1e-5);
  b.beat_frequency_ghz = 3.06;
  b.beat_visibility = 0.3;
  EXPECT_LT(temporal_overlap_with_beat(a, b), kOverlap751_932);
}

TEST(ModeMatch, SpectralOverlapOfLorentzians) {
  const auto grid = uniform_grid(-200.0, 200.0, 0.01);
  const auto a = lorentzian(0.0, 1.0, grid), b = lorentzian(1.0, 1.0, grid);
  EXPECT_NEAR(spectral_overlap(a, b), 0.49999999668, 1e-8);
  EXPECT_NEAR(spectral_overlap(a, a), 1.0, 1e-12);
}

TEST(ModeMatch, SpectralOverlapOnDifferentGrids) {
  const auto a = lorentzian(0.0, 1.0, uniform_grid(-200.0, 200.0, 0.01));
  const auto b = lorentzian(0.0, 1.0, uniform_grid(-150.0, 150.0, 0.005));
  EXPECT_NEAR(spectral_overlap(a, b), 1.0, 1e-4);
}

TEST(ModeMatch, DisjointSpectraDoNotOverlap) {
  SpectralDensity a, b;
  a.detuning_ghz = uniform_grid(-10.0, -5.0, 0.1);
  a.intensity.assign(a.size(), 1.0);
  b.detuning_ghz = uniform_grid(5.0, 10.0, 0.1);
  b.intensity.assign(b.size(), 1.0);
  EXPECT_DOUBLE_EQ(spectral_overlap(a, b), 0.0);
}

TEST(ModeMatch, GoldenSectionMatchesGridScan) {
  const auto f = [](double x) { return std::pow(x - 1.234567, 2) + 0.1 * std::abs(std::sin(x - 1.234567)); };
  const auto r = golden_section_minimize(f, -3.0, 7.0, 1e-8);
  double best = 0.0, best_v = 1e300;
  for (int i = 0; i <= 10000; ++i) {
    const double x = -3.0 + 10.0 * i / 10000.0;
    if (f(x) < best_v) {
      best_v = f(x);
      best = x;
    }
  }
  EXPECT_NEAR(r.x, best, 1e-3);
  EXPECT_LE(r.value, best_v + 1e-12);
  for (const auto& s : r.trace) {
    EXPECT_GE(s.x, -3.0);
    EXPECT_LE(s.x, 7.0);
  }
}

TEST(ModeMatch, GoldenSectionFindsBoundaryMinimum) {
  const auto r = golden_section_minimize([](double x) { return x; }, 2.0, 5.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.x, 2.0);
}

TEST(ModeMatch, CavityLengthForFeasibleTarget) {
  const SimulationConfig cfg;
  const auto cav = build_cavity(cfg, spdclab::testing::ktp_crystal());
  const auto m = match_cavity_length(1000.0, cav, 941.96, 27.0, {0.0, 30.0});
  EXPECT_NEAR(m.achieved_lifetime_ps, 1000.0, 1e-3);
  EXPECT_GE(m.air_gap_mm, 0.0);
  EXPECT_LE(m.air_gap_mm, 30.0);
  for (const auto& s : m.trace) {
    EXPECT_GE(s.x, 0.0);
    EXPECT_LE(s.x, 30.0);
  }
  // The calibrated cavity is recovered from its own lifetime.
  const auto back = match_cavity_length(1057.9703510516, cav, 941.96, 27.0, {0.0, 30.0}, 1e-9);
  EXPECT_NEAR(back.air_gap_mm, cfg.cavity.air_gap_mm, 1e-6);
}

TEST(ModeMatch, InfeasibleTargetReportsRange) {
  const auto cav = build_cavity(SimulationConfig{}, spdclab::testing::ktp_crystal());
  try {
    match_cavity_length(751.0, cav, 941.96, 27.0, {0.0, 30.0});
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_GT(e.achievable_min(), 751.0);
    EXPECT_LT(e.achievable_min(), e.achievable_max());
    EXPECT_NE(std::string(e.what()).find("achievable"), std::string::npos);
  }
}

TEST(ModeMatch, OverlapReport) {
  const auto r = overlap_report(932.0, 751.0, MismatchConvention::mean);
  EXPECT_NEAR(r.temporal_overlap, kOverlap751_932, 1e-14);
  EXPECT_NEAR(r.mismatch, 181.0 / 841.5, 1e-14);
  EXPECT_FALSE(r.spectral_overlap.has_value());
}
