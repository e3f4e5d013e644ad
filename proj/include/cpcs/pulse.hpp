#pragma once

#include <cmath>
#include <stdexcept>

namespace cpcs {

// Gaussian pulse E(t) = E0 exp[-2 ln2 ((t-center)/fwhm)^2] cos(carrier*(t-center)).
// All members in atomic units.
struct Pulse {
    double amplitude = 0;  // peak field E0
    double center = 0;     // arrival time T_i
    double fwhm = 1;       // intensity-profile duration t_p
    double carrier = 1;    // angular frequency omega_0
};

inline void validate_pulse(const Pulse& p) {
    if (p.amplitude < 0) throw std::invalid_argument("pulse: amplitude must be >= 0");
    if (p.fwhm <= 0) throw std::invalid_argument("pulse: duration must be > 0");
    if (p.carrier <= 0) throw std::invalid_argument("pulse: carrier must be > 0");
}

inline double pulse_envelope(const Pulse& p, double t) {
    const double x = (t - p.center) / p.fwhm;
    return p.amplitude * std::exp(-2.0 * M_LN2 * x * x);
}

inline double pulse_field(const Pulse& p, double t) {
    return pulse_envelope(p, t) * std::cos(p.carrier * (t - p.center));
}

}  // namespace cpcs
