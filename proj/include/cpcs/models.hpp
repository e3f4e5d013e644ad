#pragma once

#include <stdexcept>

#include "cpcs/system.hpp"

namespace cpcs {

// --- single two-level emitter -------------------------------------------------

/// Basis (|g>, |e>). One radiative channel, one linear drive, a = sigma.
inline QuantumSystem make_two_level(double omega, double gamma, double mu) {
    if (omega <= 0 || gamma <= 0) throw std::invalid_argument("two_level: omega and gamma must be > 0");
    QuantumSystem s;
    s.dim = 2;
    s.h0 = Matrix::Zero(2, 2);
    s.h0(1, 1) = omega;
    Matrix sigma = projector(0, 1, 2);
    s.jumps.push_back({sigma, gamma, "e->g"});
    s.drives.push_back({mu * (projector(1, 0, 2) + projector(0, 1, 2)), "drive"});
    s.emission_op = sigma;
    s.excitation_number = Eigen::VectorXd::Zero(2);
    s.excitation_number << 0, 1;
    check_system(s);
    return s;
}

// --- Zeeman-split exciton-biexciton -------------------------------------------

struct ExcitonBiexcitonParams {
    double omega_x;  // exciton energy
    double delta;    // Zeeman splitting of |X+> / |X->
    double gamma;    // common radiative rate of all four transitions
    double mu;       // common transition dipole
};

/// Basis (|0>, |X+>, |X->, |XX>). Energies (0, wx+delta, wx-delta, 2 wx);
/// the biexciton carries no binding energy. sigma+ light couples |0>-|X+>
/// and |X->-|XX>; sigma- light couples |0>-|X-> and |X+>-|XX>. All four
/// spontaneous channels are detected, a is their coherent sum.
inline QuantumSystem make_exciton_biexciton(const ExcitonBiexcitonParams& p) {
    if (p.omega_x <= 0 || p.gamma <= 0) throw std::invalid_argument("exciton_biexciton: omega_x and gamma must be > 0");
    if (std::abs(p.delta) >= p.omega_x) throw std::invalid_argument("exciton_biexciton: |delta| must be < omega_x");
    QuantumSystem s;
    s.dim = 4;
    s.h0 = Matrix::Zero(4, 4);
    s.h0(1, 1) = p.omega_x + p.delta;
    s.h0(2, 2) = p.omega_x - p.delta;
    s.h0(3, 3) = 2.0 * p.omega_x;

    s.jumps.push_back({projector(1, 3, 4), p.gamma, "XX->X+"});
    s.jumps.push_back({projector(2, 3, 4), p.gamma, "XX->X-"});
    s.jumps.push_back({projector(0, 1, 4), p.gamma, "X+->0"});
    s.jumps.push_back({projector(0, 2, 4), p.gamma, "X-->0"});

    auto dipole = [&](int m, int n) -> Matrix { return projector(m, n, 4) + projector(n, m, 4); };
    s.drives.push_back({p.mu * (dipole(1, 0) + dipole(3, 2)), "sigma_plus"});
    s.drives.push_back({p.mu * (dipole(2, 0) + dipole(3, 1)), "sigma_minus"});

    s.emission_op = Matrix::Zero(4, 4);
    for (const auto& j : s.jumps) s.emission_op += j.op;
    s.excitation_number = Eigen::VectorXd::Zero(4);
    s.excitation_number << 0, 1, 1, 2;
    check_system(s);
    return s;
}

// --- two coupled two-level emitters --------------------------------------------

struct CoupledEmitterParams {
    double omega1;
    double omega2;
    double g;      // excitation exchange coupling
    double gamma;  // radiative rate of each TLS
    double mu;     // dipole of TLS 1 (only TLS 1 is driven)
};

/// Product basis |n1 n2> ordered (|gg>, |ge>, |eg>, |ee>), index = 2*n1 + n2.
/// H = w1 s1'.s1 + w2 s2'.s2 + g (s1'.s2 + s1.s2'). Both emitters radiate at
/// gamma and both are detected: a = sigma1 + sigma2. The full 4-dimensional
/// space is kept; the doubly excited state matters for the strong-coupling
/// response.
inline QuantumSystem make_coupled_emitters(const CoupledEmitterParams& p) {
    if (p.omega1 <= 0 || p.omega2 <= 0 || p.gamma <= 0)
        throw std::invalid_argument("coupled_emitters: omega1, omega2, gamma must be > 0");
    QuantumSystem s;
    s.dim = 4;
    Matrix sigma1 = projector(0, 2, 4) + projector(1, 3, 4);
    Matrix sigma2 = projector(0, 1, 4) + projector(2, 3, 4);
    s.h0 = p.omega1 * (sigma1.adjoint() * sigma1) + p.omega2 * (sigma2.adjoint() * sigma2) +
           p.g * (sigma1.adjoint() * sigma2 + sigma1 * sigma2.adjoint());
    s.jumps.push_back({sigma1, p.gamma, "tls1"});
    s.jumps.push_back({sigma2, p.gamma, "tls2"});
    s.drives.push_back({p.mu * (sigma1.adjoint() + sigma1), "tls1"});
    s.emission_op = sigma1 + sigma2;
    s.excitation_number = Eigen::VectorXd::Zero(4);
    s.excitation_number << 0, 1, 1, 2;
    check_system(s);
    return s;
}

}  // namespace cpcs
