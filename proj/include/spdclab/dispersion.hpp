#ifndef SPDCLAB_DISPERSION_HPP
#define SPDCLAB_DISPERSION_HPP

// Refractive index, group index and wave vector of a biaxial crystal from
// tabulated Sellmeier and thermo-optic coefficients.
//
// Dispersion formula (one record per axis, wavelength in um):
//
//   n0^2(l) = A + B / (l^2 - C) + D / (l^2 - E)
//   n(l, T) = n0(l) + n1(l) (T - T_ref) + n2(l) (T - T_ref)^2
//
// where n1 and n2 are polynomials in 1/l, coefficients listed in ascending
// powers: n1(l) = c0 + c1/l + c2/l^2 + ...

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spdclab/core.hpp"

namespace spdclab {

enum class Axis { x = 0, y = 1, z = 2 };

inline std::string_view to_string(Axis a) {
  switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
  }
  return "?";
}

inline Axis parse_axis(std::string_view s) {
  if (s == "x") return Axis::x;
  if (s == "y") return Axis::y;
  if (s == "z") return Axis::z;
  throw ArgumentError("unknown crystal axis '" + std::string(s) + "' (expected x, y or z)");
}

struct WavelengthRange {
  double min_um = 0.0;
  double max_um = 0.0;

  bool contains(double l) const { return l >= min_um && l <= max_um; }
  bool strictly_contains(double l) const { return l > min_um && l < max_um; }

  friend bool operator==(const WavelengthRange&, const WavelengthRange&) = default;
};

/// Per-axis dispersion and thermo-optic record.
struct SellmeierSet {
  Axis axis = Axis::x;
  std::array<double, 5> sellmeier{};     // A, B [um^2], C [um^2], D [um^2], E [um^2]
  std::vector<double> dn_dT;             // 1/degC, ascending powers of 1/l
  std::vector<double> d2n_dT2;           // 1/degC^2, ascending powers of 1/l; optional
  WavelengthRange range;
  double reference_temperature_c = 20.0;

  /// Constant index n at every wavelength inside `range` and no thermal term.
  static SellmeierSet constant(double n, Axis axis = Axis::x, WavelengthRange range = {0.2, 5.0}) {
    SellmeierSet s;
    s.axis = axis;
    s.sellmeier = {n * n, 0.0, 0.0, 0.0, 0.0};
    s.range = range;
    return s;
  }

  void validate() const;

  friend bool operator==(const SellmeierSet&, const SellmeierSet&) = default;
};

namespace detail {

inline double inverse_poly(const std::vector<double>& c, double l) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc / l + *it;
  return acc;
}

inline double inverse_poly_derivative(const std::vector<double>& c, double l) {
  // d/dl sum_k c_k l^-k = sum_k -k c_k l^-(k+1)
  double acc = 0.0;
  double lp = 1.0 / (l * l);
  for (std::size_t k = 1; k < c.size(); ++k) {
    acc -= static_cast<double>(k) * c[k] * lp;
    lp /= l;
  }
  return acc;
}

inline void check_range(const SellmeierSet& s, double l) {
  if (!std::isfinite(l) || !s.range.contains(l)) {
    std::ostringstream os;
    os << "wavelength " << l << " um outside valid range [" << s.range.min_um << ", " << s.range.max_um
       << "] um for axis " << to_string(s.axis);
    throw RangeError(os.str());
  }
}

inline double n0_squared(const SellmeierSet& s, double l) {
  const auto& [a, b, c, d, e] = s.sellmeier;
  const double l2 = l * l;
  return a + b / (l2 - c) + d / (l2 - e);
}

inline double n0_squared_derivative(const SellmeierSet& s, double l) {
  const auto& [a, b, c, d, e] = s.sellmeier;
  const double l2 = l * l;
  return -2.0 * l * (b / ((l2 - c) * (l2 - c)) + d / ((l2 - e) * (l2 - e)));
}

inline double index_unchecked(const SellmeierSet& s, double l, double t) {
  const double dt = t - s.reference_temperature_c;
  double n = std::sqrt(n0_squared(s, l));
  if (dt != 0.0) {
    n += inverse_poly(s.dn_dT, l) * dt;
    if (!s.d2n_dT2.empty()) n += inverse_poly(s.d2n_dT2, l) * dt * dt;
  }
  return n;
}

}  // namespace detail

/// Refractive index at `wavelength_um` and `temperature_c`.
inline double refractive_index(const SellmeierSet& s, double wavelength_um, double temperature_c) {
  detail::check_range(s, wavelength_um);
  return detail::index_unchecked(s, wavelength_um, temperature_c);
}

/// dn/dl in 1/um, from the analytic derivative of the dispersion formula.
inline double index_derivative(const SellmeierSet& s, double wavelength_um, double temperature_c) {
  detail::check_range(s, wavelength_um);
  const double l = wavelength_um;
  const double n0 = std::sqrt(detail::n0_squared(s, l));
  double dn = detail::n0_squared_derivative(s, l) / (2.0 * n0);
  const double dt = temperature_c - s.reference_temperature_c;
  if (dt != 0.0) {
    dn += detail::inverse_poly_derivative(s.dn_dT, l) * dt;
    if (!s.d2n_dT2.empty()) dn += detail::inverse_poly_derivative(s.d2n_dT2, l) * dt * dt;
  }
  return dn;
}

/// Group index n_g = n - l dn/dl. Requires a wavelength strictly inside the range.
inline double group_index(const SellmeierSet& s, double wavelength_um, double temperature_c) {
  if (!s.range.strictly_contains(wavelength_um)) {
    std::ostringstream os;
    os << "group index needs a wavelength strictly inside [" << s.range.min_um << ", " << s.range.max_um
       << "] um, got " << wavelength_um;
    throw RangeError(os.str());
  }
  return refractive_index(s, wavelength_um, temperature_c) -
         wavelength_um * index_derivative(s, wavelength_um, temperature_c);
}

/// Wave vector k = 2 pi n / l in rad/um.
inline double wavevector(const SellmeierSet& s, double wavelength_um, double temperature_c) {
  return kTwoPi * refractive_index(s, wavelength_um, temperature_c) / wavelength_um;
}

inline void SellmeierSet::validate() const {
  std::ostringstream os;
  if (!(range.min_um < range.max_um)) {
    os << "axis " << to_string(axis) << ": range_um must satisfy min < max";
    throw ArgumentError(os.str());
  }
  if (!(range.min_um > 0.0)) {
    os << "axis " << to_string(axis) << ": range_um must be positive";
    throw ArgumentError(os.str());
  }
  constexpr int kSamples = 200;
  for (int i = 0; i <= kSamples; ++i) {
    const double l = range.min_um + (range.max_um - range.min_um) * i / kSamples;
    const double n2 = detail::n0_squared(*this, l);
    if (!(n2 > 1.0) || !std::isfinite(n2)) {
      os << "axis " << to_string(axis) << ": index n <= 1 (or a pole) at " << l << " um inside the valid range";
      throw ArgumentError(os.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Material bundle and data file
// ---------------------------------------------------------------------------

/// All axes of one crystal material.
struct Material {
  std::string name;
  std::string source;
  std::array<std::optional<SellmeierSet>, 3> axes;

  const SellmeierSet& axis(Axis a) const {
    const auto& s = axes[static_cast<std::size_t>(a)];
    if (!s) throw ArgumentError("material '" + name + "' has no record for axis " + std::string(to_string(a)));
    return *s;
  }

  /// Material whose three axes share one constant index.
  static Material isotropic_constant(double n, WavelengthRange range = {0.2, 5.0}) {
    Material m;
    m.name = "constant";
    for (Axis a : {Axis::x, Axis::y, Axis::z}) m.axes[static_cast<std::size_t>(a)] = SellmeierSet::constant(n, a, range);
    return m;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<double> parse_number_list(std::string_view text, const std::string& where) {
  std::string t = trim(text);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']') {
    throw ArgumentError(where + ": expected a bracketed list like [1.0, 2.0]");
  }
  t = t.substr(1, t.size() - 2);
  std::vector<double> out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string v = trim(item);
    if (v.empty()) {
      if (out.empty() && trim(t).empty()) break;
      throw ArgumentError(where + ": empty list element");
    }
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      throw ArgumentError(where + ": not a number '" + v + "'");
    }
    if (used != v.size()) throw ArgumentError(where + ": not a number '" + v + "'");
    out.push_back(x);
  }
  return out;
}

inline double parse_number(std::string_view text, const std::string& where) {
  const std::string v = trim(text);
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ArgumentError(where + ": not a number '" + v + "'");
  }
  if (used != v.size()) throw ArgumentError(where + ": not a number '" + v + "'");
  return x;
}

}  // namespace detail

/// Parses the plain-text dispersion format: `key = value` lines, `#` comments,
/// one record per axis started by `axis = <x|y|z>`.
inline Material parse_dispersion(std::string_view text, const std::string& origin = "<string>") {
  Material m;
  std::optional<SellmeierSet> current;
  std::array<bool, 4> seen{};  // coeffs, dn_dT, range_um, T_ref_C
  int record_line = 0;

  const auto flush = [&]() {
    if (!current) return;
    const std::string where = origin + ":" + std::to_string(record_line);
    static constexpr std::array<const char*, 4> kNames{"coeffs", "dn_dT", "range_um", "T_ref_C"};
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) throw ArgumentError(where + ": axis record is missing '" + kNames[i] + "'");
    }
    current->validate();
    auto& slot = m.axes[static_cast<std::size_t>(current->axis)];
    if (slot) throw ArgumentError(where + ": duplicate record for axis " + std::string(to_string(current->axis)));
    slot = *current;
    current.reset();
    seen = {};
  };

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw ArgumentError(where + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(stripped).substr(0, eq));
    const std::string value = detail::trim(std::string_view(stripped).substr(eq + 1));

    if (key == "axis") {
      flush();
      current = SellmeierSet{};
      current->axis = parse_axis(value);
      record_line = line_no;
      continue;
    }
    if (!current) {
      if (key == "material") {
        m.name = value;
      } else if (key == "source") {
        m.source = value;
      } else {
        throw ArgumentError(where + ": key '" + key + "' must follow an 'axis =' line");
      }
      continue;
    }
    if (key == "coeffs") {
      const auto c = detail::parse_number_list(value, where);
      if (c.size() != 5) throw ArgumentError(where + ": coeffs needs exactly 5 values [A, B, C, D, E]");
      std::copy(c.begin(), c.end(), current->sellmeier.begin());
      seen[0] = true;
    } else if (key == "dn_dT") {
      current->dn_dT = detail::parse_number_list(value, where);
      seen[1] = true;
    } else if (key == "d2n_dT2") {
      current->d2n_dT2 = detail::parse_number_list(value, where);
    } else if (key == "range_um") {
      const auto r = detail::parse_number_list(value, where);
      if (r.size() != 2) throw ArgumentError(where + ": range_um needs [min, max]");
      current->range = {r[0], r[1]};
      seen[2] = true;
    } else if (key == "T_ref_C") {
      current->reference_temperature_c = detail::parse_number(value, where);
      seen[3] = true;
    } else {
      throw ArgumentError(where + ": unknown key '" + key + "'");
    }
  }
  flush();
  if (!m.axes[0] && !m.axes[1] && !m.axes[2]) throw ArgumentError(origin + ": no axis records found");
  return m;
}

inline Material load_dispersion(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArgumentError("cannot open dispersion file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_dispersion(buf.str(), path);
}

// ---------------------------------------------------------------------------
// Crystal
// ---------------------------------------------------------------------------

/// Nonlinear crystal: material, geometry, poling and working temperature.
struct CrystalSpec {
  Material material;
  double length_mm = 5.0;
  std::optional<double> poling_period_um = 33.25;  // nullopt: unpoled
  double temperature_c = 27.0;
  /// Extra constant mismatch subtracted from delta k (walk-off, compensator, calibration).
  double phase_offset_rad_per_um = 0.0;
  Axis pump_axis = Axis::y;
  Axis signal_axis = Axis::y;
  Axis idler_axis = Axis::z;

  void validate() const {
    if (!(length_mm > 0.0)) throw ArgumentError("crystal length must be > 0");
    if (poling_period_um && !(*poling_period_um > 0.0)) throw ArgumentError("poling period must be > 0 when poled");
    (void)material.axis(pump_axis);
    (void)material.axis(signal_axis);
    (void)material.axis(idler_axis);
  }

  CrystalSpec at_temperature(double t) const {
    CrystalSpec c = *this;
    c.temperature_c = t;
    return c;
  }
};

}  // namespace spdclab

#endif  // SPDCLAB_DISPERSION_HPP
