#pragma once

#include <cmath>

// Internal convention: angular frequencies in rad/ns, times in ns.
// Interfaces that talk to configs or reports use MHz / GHz and convert here.
namespace dragsim {

inline constexpr double two_pi = 6.283185307179586476925286766559;
inline constexpr double pi = 3.1415926535897932384626433832795;
inline constexpr double half_pi = 1.5707963267948966192313216916398;

// 1 GHz of ordinary frequency = 2*pi rad/ns of angular frequency.
inline double ghz_to_rad(double f_ghz) { return two_pi * f_ghz; }
inline double mhz_to_rad(double f_mhz) { return two_pi * 1e-3 * f_mhz; }
inline double rad_to_ghz(double w) { return w / two_pi; }
inline double rad_to_mhz(double w) { return 1e3 * w / two_pi; }

// Wrap an angle into [0, 2*pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a, two_pi);
  if (r < 0) r += two_pi;
  return r;
}

}  // namespace dragsim
