#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cpcs/system.hpp"

namespace cpcs {

/// Lindblad dissipator sum_i gamma_i (J rho J' - 1/2 {J'J, rho}).
inline Matrix dissipator(const QuantumSystem& s, const Matrix& rho) {
    if (rho.rows() != s.dim || rho.cols() != s.dim)
        throw std::invalid_argument("dissipator: density matrix dimension mismatch");
    Matrix out = Matrix::Zero(s.dim, s.dim);
    for (const auto& j : s.jumps) {
        Matrix jdj = j.op.adjoint() * j.op;
        out += j.rate * (j.op * rho * j.op.adjoint() - 0.5 * (jdj * rho + rho * jdj));
    }
    return out;
}

namespace detail {

/// N-raising part of a Hermitian drive coupling (entries that increase the
/// excitation number), used to assemble the rotating-frame drive.
inline Matrix raising_part(const Matrix& d, const Eigen::VectorXd& n) {
    Matrix up = Matrix::Zero(d.rows(), d.cols());
    for (int r = 0; r < d.rows(); ++r)
        for (int c = 0; c < d.cols(); ++c)
            if (n(r) > n(c) + 0.5) up(r, c) = d(r, c);
    return up;
}

}  // namespace detail

/// Coherent drive Hamiltonian at time t. Lab frame: sum over pulses of
/// -E_i(t) D_c with the full carrier. Rotating frame: the co-rotating half,
/// -env_i(t)/2 (e^{i w Ti} D_up + h.c.), constant phases set by the pulse centers.
inline Matrix drive_hamiltonian(const QuantumSystem& s, const DriveProgram& p, double t) {
    Matrix hd = Matrix::Zero(s.dim, s.dim);
    for (const auto& a : p.assignments) {
        const Matrix& d = s.drives.at(a.channel).op;
        if (p.frame == Frame::Lab) {
            hd -= pulse_field(a.pulse, t) * d;
        } else {
            Matrix up = detail::raising_part(d, s.excitation_number);
            Complex phase = std::exp(iu * p.frame_frequency * a.pulse.center);
            Matrix half = phase * up;
            hd -= 0.5 * pulse_envelope(a.pulse, t) * (half + half.adjoint());
        }
    }
    return hd;
}

/// Right-hand side of the driven master equation,
/// rho' = -i[H, rho] - i[H_d(t), rho] + L(rho), hbar = 1.
inline Matrix master_rhs(const QuantumSystem& s, const DriveProgram& p, const Matrix& rho, double t) {
    if (rho.rows() != s.dim || rho.cols() != s.dim)
        throw std::invalid_argument("master_rhs: density matrix dimension mismatch");
    Matrix h = s.h0;
    if (p.frame == Frame::Rotating) h -= p.frame_frequency * s.number_operator();
    h += drive_hamiltonian(s, p, t);
    Matrix out = -iu * (h * rho - rho * h);
    out += dissipator(s, rho);
    return out;
}

/// Classical fixed-step RK4 update with rhs evaluated at t, t+dt/2, t+dt.
template <typename Rhs>
Matrix rk4_step(Rhs&& rhs, const Matrix& rho, double t, double dt) {
    Matrix k1 = rhs(rho, t);
    Matrix k2 = rhs((rho + 0.5 * dt * k1).eval(), t + 0.5 * dt);
    Matrix k3 = rhs((rho + 0.5 * dt * k2).eval(), t + 0.5 * dt);
    Matrix k4 = rhs((rho + dt * k3).eval(), t + dt);
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct TrajectoryDiagnostics {
    double max_herm_defect = 0;      // over all stored states
    double max_trace_drift = 0;      // |tr rho(t) - tr rho(0)|
    double min_eigenvalue = 0;       // sampled
    double peak_excitation = 0;      // max_t <sum J'J>
    double final_excitation = 0;
    double initial_trace = 0;
};

struct DensityTrajectory {
    TimeGrid grid;
    bool normalized_input = true;
    std::vector<Matrix> states;            // n_steps+1 entries
    std::vector<double> emission_expect;   // <sum_i J_i'J_i>(t_k), per-channel intensity sum
    TrajectoryDiagnostics diag;

    const Matrix& state(int k) const { return states.at(k); }
};

struct PropagateOptions {
    int eigen_sample_interval = 200;  // positivity sampling cadence, 0 disables
    std::function<void(int, double, const Matrix&)> observer;  // (index, time, state)
};

/// Integrate the master equation over the grid. Conditional (unnormalized)
/// inputs are propagated as-is, never renormalized. Throws on non-finite
/// values, which signals a step size too large for the carrier.
inline DensityTrajectory propagate(const QuantumSystem& s, const DriveProgram& p,
                                   const DensityMatrix& rho0, const TimeGrid& grid,
                                   const PropagateOptions& opt = {}) {
    check_program(s, p);
    if (rho0.dim() != s.dim) throw std::invalid_argument("propagate: initial state dimension mismatch");

    DensityTrajectory traj;
    traj.grid = grid;
    traj.normalized_input = rho0.normalized;
    traj.states.reserve(grid.n_points());
    traj.emission_expect.reserve(grid.n_points());

    const Matrix nem = s.emission_number();
    auto rhs = [&](const Matrix& r, double t) { return master_rhs(s, p, r, t); };

    Matrix rho = rho0.mat;
    const double tr0 = rho.trace().real();
    traj.diag.initial_trace = tr0;
    traj.diag.min_eigenvalue = min_eigenvalue(rho);

    for (int k = 0; k <= grid.n_steps; ++k) {
        const double t = grid.time(k);
        if (!rho.allFinite())
            throw std::runtime_error("propagate: non-finite state at t=" + std::to_string(t) +
                                     " (reduce dt)");
        traj.states.push_back(rho);
        const double ne = (nem * rho).trace().real();
        traj.emission_expect.push_back(ne);
        traj.diag.peak_excitation = std::max(traj.diag.peak_excitation, ne);
        traj.diag.max_herm_defect = std::max(traj.diag.max_herm_defect, herm_defect(rho));
        traj.diag.max_trace_drift =
            std::max(traj.diag.max_trace_drift, std::abs(rho.trace().real() - tr0));
        if (opt.eigen_sample_interval > 0 &&
            (k % opt.eigen_sample_interval == 0 || k == grid.n_steps))
            traj.diag.min_eigenvalue = std::min(traj.diag.min_eigenvalue, min_eigenvalue(rho));
        if (opt.observer) opt.observer(k, t, rho);
        if (k < grid.n_steps) rho = rk4_step(rhs, rho, t, grid.dt);
    }
    traj.diag.final_excitation = traj.emission_expect.back();
    return traj;
}

}  // namespace cpcs
