#pragma once

namespace spdcwg {

// Unit conventions used throughout: length um, time fs, angular frequency
// rad/fs, propagation constants rad/um.  CSV columns labelled _nm convert on
// output only.
inline constexpr double c_um_per_fs = 0.299792458;
inline constexpr double pi = 3.14159265358979323846;

inline constexpr double omega_from_lambda(double lambda_um) {
    return 2.0 * pi * c_um_per_fs / lambda_um;
}

inline constexpr double lambda_from_omega(double omega_rad_fs) {
    return 2.0 * pi * c_um_per_fs / omega_rad_fs;
}

}  // namespace spdcwg
