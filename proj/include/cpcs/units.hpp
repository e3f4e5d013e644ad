#pragma once

// Hartree atomic units are used for all internal arithmetic (hbar = 1, so an
// energy in a.u. doubles as a rate in inverse atomic time units). Conversions
// happen only at I/O boundaries.

namespace cpcs::units {

// CODATA 2018.
inline constexpr double hartree_eV = 27.211386245988;       // 1 Eh in eV
inline constexpr double au_time_fs = 2.4188843265857e-2;    // 1 atomic time unit in fs
inline constexpr double au_field_V_per_m = 5.14220674763e11;
inline constexpr double au_dipole_debye = 2.5417464731818;  // e*a0 in Debye
inline constexpr double hartree_Hz = 6.579683920502e15;     // Eh/h, ordinary frequency

inline double ev_to_au(double ev) { return ev / hartree_eV; }
inline double au_to_ev(double au) { return au * hartree_eV; }

inline double fs_to_au(double fs) { return fs / au_time_fs; }
inline double au_to_fs(double au) { return au * au_time_fs; }

inline double vpm_to_au(double vpm) { return vpm / au_field_V_per_m; }
inline double au_to_vpm(double au) { return au * au_field_V_per_m; }

inline double debye_to_au(double d) { return d / au_dipole_debye; }
inline double au_to_debye(double au) { return au * au_dipole_debye; }

// Ordinary (cyclic) frequency nu = E/h.
inline double hz_to_au(double hz) { return hz / hartree_Hz; }
inline double au_to_hz(double au) { return au * hartree_Hz; }

}  // namespace cpcs::units
