#pragma once

#include <numbers>

namespace qsf::units {

inline constexpr double kPi = std::numbers::pi;

// Angular frequency in rad/s from a cyclic frequency in MHz.
constexpr double mhz_to_rad_per_s(double mhz) { return 2.0 * kPi * mhz * 1e6; }
constexpr double rad_per_s_to_mhz(double w) { return w / (2.0 * kPi * 1e6); }

constexpr double ns(double v) { return v * 1e-9; }
constexpr double to_ns(double seconds) { return seconds * 1e9; }

}  // namespace qsf::units
