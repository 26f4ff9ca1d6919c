#include <gtest/gtest.h>

#include <cmath>

#include "spdclab/dispersion.hpp"
#include "support.hpp"

using namespace spdclab;
using spdclab::testing::ktp_axis;
using spdclab::testing::thrown_message;

namespace {

// Reference values from an independent mpmath evaluation of the same data file.
constexpr double kNy = 1.7496665451745304;
constexpr double kNz = 1.835355089372862;
constexpr double kNgY = 1.7865970123706564;
constexpr double kNgZ = 1.8853391577005536;

const char* kMinimal = R"(material = test
axis = y
coeffs = [3.45018, 0.04341, 0.04597, 16.98825, 39.43799]
dn_dT = [0.5425e-5, 0.5154e-5, -0.4063e-5, 0.1997e-5]
range_um = [0.43, 1.58]
T_ref_C = 20
)";

}  // namespace

TEST(Dispersion, KtpIndicesAtDegeneracy) {
  EXPECT_NEAR(refractive_index(ktp_axis(Axis::y), 0.94185, 27.0), kNy, 1e-12);
  EXPECT_NEAR(refractive_index(ktp_axis(Axis::z), 0.94185, 27.0), kNz, 1e-12);
}

TEST(Dispersion, KtpGroupIndices) {
  EXPECT_NEAR(group_index(ktp_axis(Axis::y), 0.94185, 27.0), kNgY, 1e-11);
  EXPECT_NEAR(group_index(ktp_axis(Axis::z), 0.94185, 27.0), kNgZ, 1e-11);
}

TEST(Dispersion, AnalyticGroupIndexMatchesFiniteDifference) {
  for (Axis a : {Axis::x, Axis::y, Axis::z}) {
    const auto& s = ktp_axis(a);
    for (double l : {0.47, 0.6, 0.8, 0.94185, 1.2, 1.5}) {
      for (double t : {15.0, 27.0, 40.0}) {
        const double h = 1e-5;
        const double dn = (refractive_index(s, l + h, t) - refractive_index(s, l - h, t)) / (2 * h);
        const double ng_fd = refractive_index(s, l, t) - l * dn;
        EXPECT_LT(std::abs(group_index(s, l, t) - ng_fd), 1e-5) << "axis " << to_string(a) << " l=" << l;
      }
    }
  }
}

TEST(Dispersion, ThermoOpticShiftIsLinearAboutReference) {
  const auto& s = ktp_axis(Axis::z);
  const double n20 = refractive_index(s, 0.94185, 20.0);
  const double n30 = refractive_index(s, 0.94185, 30.0);
  const double n40 = refractive_index(s, 0.94185, 40.0);
  EXPECT_NEAR(n40 - n30, n30 - n20, 1e-14);
  EXPECT_GT(n30, n20);
}

TEST(Dispersion, OutOfRangeWavelengthThrowsRangeError) {
  EXPECT_THROW(refractive_index(ktp_axis(Axis::y), 0.40, 27.0), RangeError);
  EXPECT_THROW(refractive_index(ktp_axis(Axis::y), 1.60, 27.0), RangeError);
  // Group index needs a strictly interior point for the derivative.
  EXPECT_NO_THROW(refractive_index(ktp_axis(Axis::y), 0.43, 27.0));
  EXPECT_THROW(group_index(ktp_axis(Axis::y), 0.43, 27.0), RangeError);
}

TEST(Dispersion, ConstantMaterialHasGroupIndexEqualToIndex) {
  const auto m = Material::isotropic_constant(1.5);
  EXPECT_DOUBLE_EQ(refractive_index(m.axis(Axis::x), 0.8, 50.0), 1.5);
  EXPECT_NEAR(group_index(m.axis(Axis::z), 0.8, 50.0), 1.5, 1e-14);
}

TEST(DispersionParse, MinimalRecord) {
  const auto m = parse_dispersion(kMinimal, "mem");
  EXPECT_EQ(m.name, "test");
  EXPECT_EQ(m.axis(Axis::y), ktp_axis(Axis::y));
  EXPECT_THROW((void)m.axis(Axis::x), ArgumentError);
}

TEST(DispersionParse, ErrorsCarryLineNumbers) {
  const std::string bad_number = std::string(kMinimal).replace(std::string(kMinimal).find("0.04341"), 7, "abc");
  EXPECT_NE(thrown_message<ArgumentError>([&] { parse_dispersion(bad_number, "f.txt"); }).find("f.txt:3"),
            std::string::npos);

  const std::string unknown = std::string(kMinimal) + "colour = blue\n";
  const auto msg = thrown_message<ArgumentError>([&] { parse_dispersion(unknown, "f.txt"); });
  EXPECT_NE(msg.find("f.txt:7"), std::string::npos) << msg;
  EXPECT_NE(msg.find("colour"), std::string::npos) << msg;
}

TEST(DispersionParse, MissingKeyAndDuplicateAxis) {
  const std::string missing = "axis = y\ncoeffs = [3, 0, 0, 0, 0]\nrange_um = [0.5, 1]\nT_ref_C = 20\n";
  EXPECT_NE(thrown_message<ArgumentError>([&] { parse_dispersion(missing, "m"); }).find("dn_dT"),
            std::string::npos);
  const std::string record = std::string(kMinimal).substr(std::string(kMinimal).find("axis"));
  EXPECT_NE(thrown_message<ArgumentError>([&] { parse_dispersion(record + record, "m"); }).find("duplicate"),
            std::string::npos);
}

TEST(DispersionParse, RejectsBadCoefficientsAndRanges) {
  EXPECT_THROW(parse_dispersion("axis = y\ncoeffs = [3, 0, 0, 0]\n", "m"), ArgumentError);
  EXPECT_THROW(parse_dispersion("axis = y\ncoeffs = [3, 0, 0, 0, 0]\ndn_dT = []\nrange_um = [1.0, 0.5]\nT_ref_C = 20\n",
                                "m"),
               ArgumentError);
  // n^2 = 0.5 is unphysical.
  EXPECT_THROW(
      parse_dispersion("axis = y\ncoeffs = [0.5, 0, 0, 0, 0]\ndn_dT = []\nrange_um = [0.5, 1]\nT_ref_C = 20\n", "m"),
      ArgumentError);
  EXPECT_THROW(parse_dispersion("# only comments\n", "m"), ArgumentError);
  EXPECT_THROW(parse_dispersion("axis = w\n", "m"), ArgumentError);
}

TEST(DispersionParse, ShippedFileHasAllAxes) {
  const auto& m = spdclab::testing::ktp_crystal().material;
  EXPECT_EQ(m.name, "KTP");
  for (Axis a : {Axis::x, Axis::y, Axis::z}) {
    EXPECT_DOUBLE_EQ(m.axis(a).reference_temperature_c, 20.0);
    EXPECT_DOUBLE_EQ(m.axis(a).range.min_um, 0.43);
  }
}
