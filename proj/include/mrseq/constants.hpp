#pragma once

#include <numbers>

namespace mrseq {

// Proton gyromagnetic ratio over 2π, Hz/T.
inline constexpr double kGammaBar = 42.5774688e6;
// Proton gyromagnetic ratio, rad/s/T.
inline constexpr double kGamma = 2.0 * std::numbers::pi * kGammaBar;

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg_to_rad(double deg) { return deg * (kPi / 180.0); }

} // namespace mrseq
