#include <gtest/gtest.h>

#include <cmath>

#include "spdclab/temporal.hpp"

using namespace spdclab;

namespace {

constexpr double kLinewidth751 = 211.92402542;  // MHz
constexpr double kLinewidth932 = 170.76710632;

std::vector<double> bins(double t_max = 6000.0, double step = 8.0) { return uniform_grid(0.0, t_max, step); }

}  // namespace

TEST(Temporal, NaturalLinewidth) {
  EXPECT_NEAR(natural_linewidth_mhz(751.0), kLinewidth751, 1e-6);
  EXPECT_NEAR(natural_linewidth_mhz(932.0), kLinewidth932, 1e-6);
  EXPECT_THROW(natural_linewidth_mhz(0.0), ArgumentError);
}

TEST(Temporal, MismatchConventions) {
  EXPECT_NEAR(lifetime_mismatch(932.0, 751.0), 181.0 / 751.0, 1e-15);
  EXPECT_NEAR(lifetime_mismatch(932.0, 751.0, MismatchConvention::mean), 181.0 / 841.5, 1e-15);
  EXPECT_NEAR(lifetime_mismatch(751.0, 932.0), 181.0 / 932.0, 1e-15);
}

TEST(Temporal, NoiselessExponentialRoundTrip) {
  for (double tau : {300.0, 751.0, 932.0, 2000.0}) {
    WavepacketParams p{tau, std::nullopt, 0.0, 0.0, 250.0};
    const auto fit = fit_exponential(synth_wavepacket(p, bins()));
    EXPECT_NEAR(fit.lifetime_ps, tau, 0.005 * tau);
    EXPECT_NEAR(fit.amplitude, 250.0, 0.005 * 250.0);
  }
}

TEST(Temporal, NoiselessBeatRoundTrip) {
  WavepacketParams p{932.0, 3.06, 0.3, 0.4, 400.0};
  const auto fit = fit_exp_beat(synth_wavepacket(p, bins()));
  ASSERT_TRUE(fit.beat_identified);
  EXPECT_NEAR(fit.lifetime_ps, 932.0, 0.005 * 932.0);
  EXPECT_NEAR(*fit.beat_frequency_ghz, 3.06, 0.005 * 3.06);
  EXPECT_NEAR(*fit.beat_visibility, 0.3, 0.005 * 0.3);
}

TEST(Temporal, NoBeatIsReportedAsUnidentified) {
  WavepacketParams p{932.0, 3.06, 0.0, 0.0, 400.0};
  const auto fit = fit_exp_beat(synth_wavepacket(p, bins(), 7));
  EXPECT_FALSE(fit.beat_identified);
  EXPECT_FALSE(fit.beat_frequency_ghz.has_value());
}

TEST(Temporal, NoisyBeatFitRecoversFrequency) {
  WavepacketParams p{932.0, 3.06, 0.3, 0.0, 400.0};
  const auto fit = fit_exp_beat(synth_wavepacket(p, bins(), 20231));
  ASSERT_TRUE(fit.beat_identified);
  EXPECT_NEAR(*fit.beat_frequency_ghz, 3.06, 0.1);
  EXPECT_NEAR(fit.lifetime_ps, 932.0, 4.0 * fit.lifetime_stderr_ps);
  EXPECT_LT(fit.reduced_chi2, 1.5);
}

TEST(Temporal, PoissonLayerIsSeeded) {
  WavepacketParams p{932.0, 3.06, 0.3, 0.0, 400.0};
  const auto a = synth_wavepacket(p, bins(), 5);
  const auto b = synth_wavepacket(p, bins(), 5);
  const auto c = synth_wavepacket(p, bins(), 6);
  EXPECT_EQ(*a.counts, *b.counts);
  EXPECT_NE(*a.counts, *c.counts);
  EXPECT_FALSE(synth_wavepacket(p, bins()).counts.has_value());
}

TEST(Temporal, InvalidInputs) {
  WavepacketParams p;
  p.beat_visibility = 1.2;
  EXPECT_THROW(synth_wavepacket(p, bins()), ArgumentError);
  p.beat_visibility = 0.3;
  p.lifetime_ps = -1.0;
  EXPECT_THROW(synth_wavepacket(p, bins()), ArgumentError);

  TemporalProfile rising;
  rising.times_ps = bins(200.0, 10.0);
  for (double t : rising.times_ps) rising.intensity.push_back(1.0 + t);
  EXPECT_THROW(fit_exponential(rising), FitError);

  // 3.06 GHz needs bins shorter than ~54 ps.
  WavepacketParams q{932.0, 3.06, 0.3, 0.0, 400.0};
  EXPECT_THROW(fit_exp_beat(synth_wavepacket(q, bins(6000.0, 100.0))), ResolutionError);
}
