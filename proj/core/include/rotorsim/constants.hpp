#pragma once

// Internal unit system: hbar = 1, energies/angular frequencies in rad/ps,
// time in ps. Conversion factors below are exact products of 2019 SI
// defining constants (h = 6.62607015e-34 J s, kB = 1.380649e-23 J/K,
// c = 299792458 m/s).

namespace rotorsim {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "rotorsim";

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// 1 cm^-1 = 2*pi*c rad/ps with c = 0.0299792458 cm/ps  -> 0.1883651567 rad/ps
inline constexpr double kCmInvToRadPerPs = kTwoPi * 0.0299792458;

// 1 GHz = 2*pi*1e-3 rad/ps
inline constexpr double kGHzToRadPerPs = kTwoPi * 1.0e-3;

// kB/hbar in rad/ps per kelvin; hbar = h / (2*pi)
inline constexpr double kHbarSI = 6.62607015e-34 / kTwoPi;
inline constexpr double kKelvinToRadPerPs = 1.380649e-23 / kHbarSI * 1.0e-12;

}  // namespace rotorsim
