#include <gtest/gtest.h>

#include <cmath>

#include "spdclab/qdscatter.hpp"
#include "support.hpp"

using namespace spdclab;

namespace {

ScanResult synthetic_double_peak(double c1, double c2, double w, double a1, double a2, double bg) {
  ScanResult s;
  for (double d : uniform_grid(-5.0, 8.0, 0.02)) {
    const double mu = bg + a1 * detail::lorentzian(w, d - c1) + a2 * detail::lorentzian(w, d - c2);
    s.biases_v.push_back(0.0);
    s.detuning_ghz.push_back(d);
    s.expected.push_back(mu);
    s.counts.push_back(static_cast<std::int64_t>(std::llround(mu)));
  }
  return s;
}

SpectralDensity flat_spectrum() {
  SpectralDensity s;
  s.detuning_ghz = symmetric_grid(30.0, 0.01);
  s.intensity.assign(s.detuning_ghz.size(), 1.0);
  return s;
}

}  // namespace

TEST(QdScatter, LorentzianLineWidth) {
  const QDSpec qd;
  EXPECT_DOUBLE_EQ(qd_lineshape(qd, 0.0), 1.0);
  EXPECT_NEAR(qd_lineshape(qd, 0.365), 0.5, 1e-12);
  EXPECT_NEAR(qd_lineshape(qd, -0.365), 0.5, 1e-12);
  EXPECT_NEAR(qd.natural_fwhm_mhz(), 211.92402542, 1e-6);
}

TEST(QdScatter, VoigtKeepsBroadenedWidth) {
  QDSpec qd;
  qd.lineshape = LineShape::voigt;
  EXPECT_NEAR(qd_lineshape(qd, 0.0), 1.0, 1e-12);
  const auto x = uniform_grid(-3.0, 3.0, 0.0005);
  std::vector<double> y;
  for (double d : x) y.push_back(qd_lineshape(qd, d));
  EXPECT_NEAR(numeric_fwhm(x, y), 0.730, 0.730 * 2e-3);
  // Lorentzian wings: the Voigt falls faster than a pure Lorentzian of the same width.
  QDSpec lor;
  EXPECT_LT(qd_lineshape(qd, 2.0), qd_lineshape(lor, 2.0));
}

TEST(QdScatter, BroadeningBelowNaturalWidthRejected) {
  QDSpec qd;
  qd.broadened_fwhm_mhz = 100.0;
  EXPECT_THROW(qd.validate(), ArgumentError);
}

TEST(QdScatter, StarkShiftSign) {
  const QDSpec qd;
  EXPECT_DOUBLE_EQ(stark_detuning(qd, qd.reference_bias_v), 0.0);
  EXPECT_GT(stark_detuning(qd, 0.3), 0.0);
  EXPECT_LT(stark_detuning(qd, 0.7), 0.0);
  EXPECT_NEAR(stark_detuning(qd, 0.4), 1.0, 1e-12);
}

TEST(QdScatter, DarkOnlyCounts) {
  ScanSettings st;
  st.kappa = 0.0;
  const auto biases = uniform_grid(0.0, 1.0, 0.01);
  const auto r = scattering_scan(flat_spectrum(), QDSpec{}, biases, st, 3);
  double mean = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_DOUBLE_EQ(r.expected[i], 66000.0);
    EXPECT_NEAR(static_cast<double>(r.counts[i]), 66000.0, 4.0 * std::sqrt(66000.0));
    mean += static_cast<double>(r.background[i]) / static_cast<double>(r.size());
  }
  EXPECT_NEAR(mean, 66000.0, 3.0 * std::sqrt(66000.0 / static_cast<double>(r.size())));
}

TEST(QdScatter, FlatSpectrumGivesFlatScan) {
  const auto biases = uniform_grid(0.0, 1.0, 0.05);
  const auto r = scattering_scan(flat_spectrum(), QDSpec{}, biases, ScanSettings{}, 3);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_NEAR(r.expected[i], r.expected[0], 1e-3 * r.expected[0]);
}

TEST(QdScatter, SymmetricSpectrumGivesMirrorSymmetricScan) {
  SpectralDensity s;
  s.detuning_ghz = symmetric_grid(20.0, 0.005);
  for (double d : s.detuning_ghz) s.intensity.push_back(detail::lorentzian(0.15, d - 1.5) + detail::lorentzian(0.15, d + 1.5));
  const auto biases = uniform_grid(0.0, 1.0, 0.01);
  const auto r = scattering_scan(s, QDSpec{}, biases, ScanSettings{}, 9);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_NEAR(r.expected[i], r.expected[r.size() - 1 - i], 1e-9 * r.expected[i]);
  }
}

TEST(QdScatter, ScanDependsOnlyOnSeed) {
  const auto biases = uniform_grid(0.0, 1.0, 0.01);
  const auto a = scattering_scan(flat_spectrum(), QDSpec{}, biases, ScanSettings{}, 77, 1);
  const auto b = scattering_scan(flat_spectrum(), QDSpec{}, biases, ScanSettings{}, 77, 4);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.background, b.background);
}

TEST(QdScatter, NoiselessDoublePeakRoundTrip) {
  const auto s = synthetic_double_peak(0.0, 2.8, 0.88, 2e6, 1.2e6, 1e5);
  const auto f = fit_double_peak(s);
  EXPECT_NEAR(f.separation_ghz, 2.8, 0.005 * 2.8);
  EXPECT_NEAR(f.widths_fwhm_ghz[0], 0.88, 0.005 * 0.88);
  EXPECT_NEAR(f.widths_fwhm_ghz[1], 0.88, 0.005 * 0.88);
  EXPECT_NEAR(f.amplitude_ratio, 0.6, 0.005 * 0.6);
  EXPECT_NEAR(f.background, 1e5, 0.005 * 1e5);
}

TEST(QdScatter, SinglePeakIsRejected) {
  const auto s = synthetic_double_peak(0.0, 2.8, 0.88, 2e6, 0.0, 1e5);
  const auto msg = spdclab::testing::thrown_message<FitError>([&] { fit_double_peak(s); });
  EXPECT_NE(msg.find("fewer than two"), std::string::npos) << msg;
}

TEST(QdScatter, DefaultScanResolvesTransverseSplitting) {
  SimulationConfig cfg;
  cfg.cavity.transverse_splitting_ghz = 3.0;
  const auto& crystal = spdclab::testing::ktp_crystal();
  const auto comb = build_comb(cfg, crystal);
  const auto spec = build_source_spectrum(cfg, crystal, comb, 20.0, 0.005, true, "spectrum");
  const auto biases = uniform_grid(0.0, 1.0, 0.005);
  const auto scan = scattering_scan(spec, cfg.qd, biases, cfg.scan.settings, cfg.run.seed);
  const auto f = fit_double_peak(scan);
  EXPECT_NEAR(f.separation_ghz, 3.0, 0.1);
  EXPECT_LT(f.amplitude_ratio, 1.0);
}
