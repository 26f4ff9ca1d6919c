#ifndef SPDCLAB_TESTS_SUPPORT_HPP
#define SPDCLAB_TESTS_SUPPORT_HPP

#include <string>

#include "spdclab/commands.hpp"

namespace spdclab::testing {

inline const CrystalSpec& ktp_crystal() {
  static const CrystalSpec c = build_crystal(SimulationConfig{});
  return c;
}

inline CrystalSpec ktp_crystal_uncalibrated() {
  CrystalSpec c = ktp_crystal();
  c.phase_offset_rad_per_um = 0.0;
  return c;
}

inline const SellmeierSet& ktp_axis(Axis a) { return ktp_crystal().material.axis(a); }

template <class E, class Fn>
std::string thrown_message(Fn&& fn) {
  try {
    fn();
  } catch (const E& e) {
    return e.what();
  }
  return "<nothing thrown>";
}

}  // namespace spdclab::testing

#endif  // SPDCLAB_TESTS_SUPPORT_HPP
