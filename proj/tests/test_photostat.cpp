#include <gtest/gtest.h>

#include <cmath>

#include "spdclab/photostat.hpp"

using namespace spdclab;

namespace {

constexpr double kIdealG3Mu005 = 0.048770575499285984;  // 1 - exp(-0.05)

DetectorSet ideal_detectors() {
  DetectorSpec d{1.0, 0.0, 3.0};
  return {d, d, d, 0.5};
}

DetectorSet default_detectors() { return {}; }

SourceStatModel poisson_model(double alpha = 1.0) { return {alpha, PairDistribution::poissonian, 1, Emission::pairs}; }

}  // namespace

TEST(Photostat, VacuumWithoutDarkCountsGivesNoClicks) {
  DetectorSet det = default_detectors();
  for (auto* d : {&det.idler, &det.transmitted, &det.reflected}) d->dark_count_rate_cps = 0.0;
  const auto c = simulate_counts(poisson_model(0.0), 5.0, det, 100000, 1);
  EXPECT_EQ(c, (CountsRecord{0, 0, 0, 0, 100000}));
}

TEST(Photostat, SinglePairsNeverGiveTriples) {
  DetectorSet det = ideal_detectors();
  SourceStatModel m{1.0, PairDistribution::single_pair, 1, Emission::pairs};
  const auto c = simulate_counts(m, 1.0, det, 200000, 3);
  EXPECT_EQ(c.n1, 200000u);
  EXPECT_EQ(c.n123, 0u);
  EXPECT_EQ(c.n12 + c.n13, c.n1);
  EXPECT_DOUBLE_EQ(g3_enumerate(m, 1.0, det, 4).e123, 0.0);
}

TEST(Photostat, HeraldRateMatchesPoissonForUnitEfficiency) {
  const std::uint64_t n = 1000000;
  const auto c = simulate_counts(poisson_model(0.1), 1.0, ideal_detectors(), n, 11);
  const double p = 1.0 - std::exp(-0.1);
  const double sigma = std::sqrt(n * p * (1.0 - p));
  EXPECT_NEAR(static_cast<double>(c.n1), n * p, 4.0 * sigma);
}

TEST(Photostat, IdealDetectorsGiveOneMinusExpMinusMu) {
  EXPECT_NEAR(g3_enumerate(poisson_model(0.05), 1.0, ideal_detectors(), 40).g3(), kIdealG3Mu005, 1e-14);
  for (double mu : {0.01, 0.2, 1.0, 3.0}) {
    EXPECT_NEAR(g3_enumerate(poisson_model(mu), 1.0, ideal_detectors(), 80).g3(), 1.0 - std::exp(-mu), 1e-12);
  }
}

TEST(Photostat, MonteCarloAgreesWithEnumeration) {
  const DetectorSet det = default_detectors();
  std::uint64_t seed = 100;
  for (double mu : {0.1, 0.2, 0.4, 0.7, 1.0}) {
    const auto model = poisson_model(mu);
    const auto c = simulate_counts(model, 1.0, det, 4000000, seed++);
    const double exact = g3_enumerate(model, 1.0, det, 60).g3();
    EXPECT_NEAR(g3_heralded(c), exact, 3.0 * g3_stderr(c)) << "mu=" << mu;
  }
}

TEST(Photostat, ThermalPairsBunchMoreThanPoissonian) {
  const DetectorSet det = default_detectors();
  SourceStatModel thermal{0.2, PairDistribution::thermal, 1, Emission::pairs};
  const double gt = g3_enumerate(thermal, 1.0, det, 200).g3();
  const double gp = g3_enumerate(poisson_model(0.2), 1.0, det, 60).g3();
  EXPECT_GT(gt, gp);
  const auto c = simulate_counts(thermal, 1.0, det, 4000000, 17);
  EXPECT_NEAR(g3_heralded(c), gt, 3.0 * g3_stderr(c));
  // Many Schmidt modes approach the Poisson limit.
  SourceStatModel multi{0.2, PairDistribution::thermal, 400, Emission::pairs};
  EXPECT_NEAR(g3_enumerate(multi, 1.0, det, 60).g3(), gp, 0.01 * gp);
}

TEST(Photostat, CoherentBenchmarkIsOne) {
  SourceStatModel coh{0.3, PairDistribution::poissonian, 1, Emission::coherent};
  const DetectorSet det = default_detectors();
  EXPECT_NEAR(g3_enumerate(coh, 1.0, det, 60).g3(), 1.0, 1e-12);
  const auto c = simulate_counts(coh, 1.0, det, 2000000, 23);
  EXPECT_NEAR(g3_heralded(c), 1.0, 3.0 * g3_stderr(c));
}

TEST(Photostat, DarkCountsAloneAreUncorrelated) {
  DetectorSet det = default_detectors();
  EXPECT_NEAR(g3_enumerate(poisson_model(0.0), 1.0, det, 4).g3(), 1.0, 1e-12);
  // Exaggerated dark rate so a short run has statistics.
  for (auto* d : {&det.idler, &det.transmitted, &det.reflected}) d->dark_count_rate_cps = 1e7;
  const auto c = simulate_counts(poisson_model(0.0), 1.0, det, 2000000, 29);
  EXPECT_NEAR(g3_heralded(c), 1.0, 3.0 * g3_stderr(c));
}

TEST(Photostat, ResultIsIndependentOfThreadCount) {
  const auto model = poisson_model(0.05);
  const auto a = simulate_counts(model, 5.0, default_detectors(), 700000, 42, 1);
  const auto b = simulate_counts(model, 5.0, default_detectors(), 700000, 42, 3);
  EXPECT_EQ(a, b);
  const auto c = simulate_counts(model, 5.0, default_detectors(), 700000, 43, 1);
  EXPECT_NE(a, c);
}

TEST(Photostat, HbtEfficienciesCancel) {
  const auto model = poisson_model(0.01);
  const double ref = g3_enumerate(model, 5.0, default_detectors(), 60).g3();
  for (double e2 : {0.1, 0.3, 0.9}) {
    for (double e3 : {0.2, 0.6, 1.0}) {
      DetectorSet det = default_detectors();
      det.transmitted.efficiency = e2;
      det.reflected.efficiency = e3;
      const double g = g3_enumerate(model, 5.0, det, 60).g3();
      EXPECT_LT(std::abs(g - ref) / ref, 0.10) << e2 << " " << e3;
    }
  }
}

TEST(Photostat, CalibratedDefaultGivesTargetAtFiveMilliwatts) {
  const SourceStatModel model = poisson_model(0.009939946942);
  EXPECT_NEAR(g3_enumerate(model, 5.0, default_detectors(), 60).g3(), 0.071, 1e-6);
  EXPECT_NEAR(calibrate_alpha(model, default_detectors(), 5.0, 0.071), 0.009939946942, 1e-9);
}

TEST(Photostat, SweepIsMonotoneInExpectation) {
  const SourceStatModel model = poisson_model(0.009939946942);
  double prev = 0.0;
  for (double p : {1.0, 5.0, 20.0, 65.0, 100.0}) {
    const double g = g3_enumerate(model, p, default_detectors(), 60).g3();
    EXPECT_GT(g, prev);
    prev = g;
  }
}

TEST(Photostat, TailBeyondCutoffIsRejected) {
  const auto msg = [] {
    try {
      g3_enumerate(poisson_model(1.0), 3.0, default_detectors(), 5);
    } catch (const ArgumentError& e) {
      return std::string(e.what());
    }
    return std::string();
  }();
  EXPECT_NE(msg.find("m_cutoff"), std::string::npos) << msg;
}

TEST(Photostat, InsufficientStatisticsCarriesCounts) {
  const auto c = simulate_counts(poisson_model(0.001), 1.0, default_detectors(), 1000, 5);
  try {
    g3_heralded(c);
    FAIL() << "expected InsufficientStatistics";
  } catch (const InsufficientStatistics& e) {
    EXPECT_NE(std::string(e.what()).find("N1="), std::string::npos);
  }
}

TEST(Photostat, InvalidDetectorsRejected) {
  DetectorSet det = default_detectors();
  det.transmitted.efficiency = 1.5;
  EXPECT_THROW(simulate_counts(poisson_model(), 1.0, det, 10, 1), ArgumentError);
  EXPECT_THROW(simulate_counts(poisson_model(), 1.0, default_detectors(), 0, 1), ArgumentError);
}
