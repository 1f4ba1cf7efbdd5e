#pragma once

namespace cp::phys {

// CODATA 2018
inline constexpr double hbar = 1.054571817e-34;   // J s
inline constexpr double k_B = 1.380649e-23;       // J/K
inline constexpr double eps0 = 8.8541878128e-12;  // F/m
inline constexpr double c = 299792458.0;          // m/s
inline constexpr double mu0 = 1.0 / (eps0 * c * c);
inline constexpr double pi = 3.14159265358979323846;

}  // namespace cp::phys
