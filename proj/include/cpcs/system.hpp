#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpcs/operators.hpp"
#include "cpcs/pulse.hpp"

namespace cpcs {

struct JumpChannel {
    Matrix op;      // lowering operator J
    double rate;    // gamma >= 0
    std::string label;
};

struct DriveCoupling {
    Matrix op;      // Hermitian dipole operator sum_mn mu_mn (|m><n| + |n><m|)
    std::string label;
};

struct QuantumSystem {
    int dim = 0;
    Matrix h0;                          // bare Hamiltonian, a.u. energy
    std::vector<JumpChannel> jumps;
    std::vector<DriveCoupling> drives;
    Matrix emission_op;                 // a = sum of detected jump operators
    Eigen::VectorXd excitation_number;  // diagonal of N in the working basis

    int drive_index(const std::string& label) const {
        for (std::size_t i = 0; i < drives.size(); ++i)
            if (drives[i].label == label) return static_cast<int>(i);
        throw std::invalid_argument("unknown drive channel: " + label);
    }

    int jump_index(const std::string& label) const {
        for (std::size_t i = 0; i < jumps.size(); ++i)
            if (jumps[i].label == label) return static_cast<int>(i);
        throw std::invalid_argument("unknown jump channel: " + label);
    }

    /// sum_i J_i^dagger J_i: the per-channel emission intensity operator.
    Matrix emission_number() const {
        Matrix n = Matrix::Zero(dim, dim);
        for (const auto& j : jumps) n += j.op.adjoint() * j.op;
        return n;
    }

    Matrix number_operator() const {
        return Matrix(excitation_number.cast<Complex>().asDiagonal());
    }
};

/// Structural checks: dimensions agree, rates nonnegative, drives Hermitian,
/// every jump lowers the excitation number by exactly one.
inline void check_system(const QuantumSystem& s) {
    auto square = [&](const Matrix& m) { return m.rows() == s.dim && m.cols() == s.dim; };
    if (s.dim <= 0 || !square(s.h0)) throw std::invalid_argument("system: bad Hamiltonian dimension");
    if (!square(s.emission_op)) throw std::invalid_argument("system: bad emission operator dimension");
    if (s.excitation_number.size() != s.dim)
        throw std::invalid_argument("system: excitation_number size mismatch");
    if (!is_hermitian(s.h0, 1e-12)) throw std::invalid_argument("system: Hamiltonian not Hermitian");
    for (const auto& j : s.jumps) {
        if (!square(j.op)) throw std::invalid_argument("system: jump dimension mismatch");
        if (j.rate < 0) throw std::invalid_argument("system: negative jump rate");
        for (int r = 0; r < s.dim; ++r)
            for (int c = 0; c < s.dim; ++c)
                if (std::abs(j.op(r, c)) > 0 &&
                    std::abs(s.excitation_number(c) - s.excitation_number(r) - 1.0) > 1e-12)
                    throw std::invalid_argument("system: jump " + j.label +
                                                " does not lower the excitation number by 1");
    }
    for (const auto& d : s.drives) {
        if (!square(d.op)) throw std::invalid_argument("system: drive dimension mismatch");
        if (!is_hermitian(d.op, 1e-12))
            throw std::invalid_argument("system: drive coupling " + d.label + " not Hermitian");
    }
}

// Reference mode is lab-frame propagation of the explicit carrier field.
// Rotating drops counter-rotating terms and works in the frame of the common
// carrier; it is provided for convergence studies and is not the mode used
// for the production coincidence results.
enum class Frame { Lab, Rotating };

struct PulseAssignment {
    Pulse pulse;
    int channel = 0;  // index into QuantumSystem::drives
};

struct DriveProgram {
    std::vector<PulseAssignment> assignments;
    Frame frame = Frame::Lab;
    double frame_frequency = 0;  // carrier used for the rotating frame

    static DriveProgram none() { return {}; }
};

inline void check_program(const QuantumSystem& s, const DriveProgram& p) {
    for (const auto& a : p.assignments) {
        validate_pulse(a.pulse);
        if (a.channel < 0 || a.channel >= static_cast<int>(s.drives.size()))
            throw std::invalid_argument("drive program references unknown channel id " +
                                        std::to_string(a.channel));
    }
    if (p.frame == Frame::Rotating && p.frame_frequency <= 0)
        throw std::invalid_argument("rotating frame requires a positive frame frequency");
}

struct TimeGrid {
    double t_start = 0;
    double dt = 0;
    int n_steps = 0;  // t_end = t_start + n_steps*dt, states live on n_steps+1 points

    double t_end() const { return t_start + n_steps * dt; }
    double time(int k) const { return t_start + k * dt; }
    int n_points() const { return n_steps + 1; }

    /// Smallest grid starting at t_start with step dt whose end reaches t_end_min.
    static TimeGrid cover(double t_start, double t_end_min, double dt) {
        if (dt <= 0) throw std::invalid_argument("grid: dt must be > 0");
        if (t_end_min <= t_start) throw std::invalid_argument("grid: empty time span");
        int n = static_cast<int>(std::ceil((t_end_min - t_start) / dt - 1e-12));
        return {t_start, dt, std::max(n, 1)};
    }
};

}  // namespace cpcs
