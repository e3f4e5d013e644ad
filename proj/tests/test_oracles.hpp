#pragma once

// Test-only closed forms and independent re-implementations used as oracles.
// Nothing here may call into the library paths it is checking.

#include <cmath>
#include <complex>
#include <vector>

#include "cpcs/system.hpp"

namespace oracle {

/// Excited-state population of a resonantly driven, radiatively damped
/// two-level system (optical Bloch equations, rotating frame), starting from
/// the ground state. rabi is the full Rabi frequency mu*E0. Handles both the
/// oscillatory (rabi > gamma/4) and overdamped branches.
inline double damped_rabi_pe(double rabi, double gamma, double t) {
    const double denom = 2.0 * rabi * rabi + gamma * gamma;
    const double w_ss = -gamma * gamma / denom;
    const double v_ss = 2.0 * rabi * gamma / denom;
    const double dv0 = -v_ss;
    const double dw0 = -1.0 - w_ss;
    const double disc = rabi * rabi - gamma * gamma / 16.0;
    double c, s;  // cos(od t) and sin(od t)/od, continued through od -> i*kappa
    if (disc >= 0) {
        const double od = std::sqrt(disc);
        c = std::cos(od * t);
        s = od > 0 ? std::sin(od * t) / od : t;
    } else {
        const double kappa = std::sqrt(-disc);
        c = std::cosh(kappa * t);
        s = std::sinh(kappa * t) / kappa;
    }
    const double damp = std::exp(-0.75 * gamma * t);
    const double dw = damp * (s * rabi * dv0 + (c - s * gamma / 4.0) * dw0);
    return 0.5 * (1.0 + w_ss + dw);
}

/// Literal term-by-term master-equation right-hand side with naive loops:
/// -i[H0 + sum_i(-E_i(t) D_i), rho] + sum_j gamma_j (J rho J' - {J'J, rho}/2).
inline cpcs::Matrix master_rhs_literal(const cpcs::QuantumSystem& s, const cpcs::DriveProgram& p,
                                       const cpcs::Matrix& rho, double t) {
    using cpcs::Complex;
    const int d = s.dim;
    cpcs::Matrix h = cpcs::Matrix::Zero(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) h(r, c) = s.h0(r, c);
    for (const auto& a : p.assignments) {
        const double x = (t - a.pulse.center) / a.pulse.fwhm;
        const double field = a.pulse.amplitude * std::exp(-2.0 * std::log(2.0) * x * x) *
                             std::cos(a.pulse.carrier * (t - a.pulse.center));
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) h(r, c) -= field * s.drives[a.channel].op(r, c);
    }
    cpcs::Matrix out = cpcs::Matrix::Zero(d, d);
    const Complex mi{0.0, -1.0};
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            Complex comm = 0;
            for (int k = 0; k < d; ++k) comm += h(r, k) * rho(k, c) - rho(r, k) * h(k, c);
            out(r, c) = mi * comm;
        }
    for (const auto& j : s.jumps) {
        cpcs::Matrix jdj = cpcs::Matrix::Zero(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) {
                Complex v = 0;
                for (int k = 0; k < d; ++k) v += std::conj(j.op(k, r)) * j.op(k, c);
                jdj(r, c) = v;
            }
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) {
                Complex sandwich = 0, anti = 0;
                for (int k = 0; k < d; ++k)
                    for (int l = 0; l < d; ++l)
                        sandwich += j.op(r, k) * rho(k, l) * std::conj(j.op(c, l));
                for (int k = 0; k < d; ++k)
                    anti += jdj(r, k) * rho(k, c) + rho(r, k) * jdj(k, c);
                out(r, c) += j.rate * (sandwich - 0.5 * anti);
            }
    }
    return out;
}

}  // namespace oracle
