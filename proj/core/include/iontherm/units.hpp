#pragma once

#include <numbers>

// Unit conventions: angular frequencies in rad/s and times in seconds
// everywhere inside the library. Human-facing layers (config files, CSV
// columns) use 2pi*kHz and microseconds; this is the one conversion layer.

namespace iontherm {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double rad_per_s_from_2pi_khz(double f_khz) { return kTwoPi * f_khz * 1e3; }
inline double two_pi_khz_from_rad_per_s(double w) { return w / (kTwoPi * 1e3); }

inline double seconds_from_us(double t_us) { return t_us * 1e-6; }
inline double us_from_seconds(double t_s) { return t_s * 1e6; }

}  // namespace iontherm
