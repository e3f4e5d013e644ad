#pragma once

#include <algorithm>
#include <thread>
#include <vector>

#include "cpcs/lindblad.hpp"
#include "cpcs/system.hpp"

// Vectorized (column-major) representation of the master equation. The
// Liouvillian is linear, so a whole RK4 step is itself a linear map on
// vec(rho); precomputing those step transfer matrices lets every conditional
// propagation launched from a different t1 reuse them as plain mat-vec
// products. Blocks of steps are materialized at a time to bound memory.

namespace cpcs {

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Matrix spre(const Matrix& a) { return kron(Matrix::Identity(a.rows(), a.cols()), a); }
inline Matrix spost(const Matrix& a) { return kron(a.transpose(), Matrix::Identity(a.rows(), a.cols())); }

inline CVector vec(const Matrix& m) {
    return Eigen::Map<const CVector>(m.data(), m.size());
}

inline Matrix unvec(const CVector& v, int dim) {
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

struct Liouvillian {
    int dim = 0;
    Matrix l_static;  // dim^2 x dim^2
    struct DriveTerm {
        Matrix l;
        Pulse pulse;
    };
    std::vector<DriveTerm> terms;
    Frame frame = Frame::Lab;

    double scalar(const DriveTerm& term, double t) const {
        return frame == Frame::Lab ? pulse_field(term.pulse, t) : pulse_envelope(term.pulse, t);
    }

    Matrix at(double t) const {
        Matrix l = l_static;
        for (const auto& term : terms) l += scalar(term, t) * term.l;
        return l;
    }
};

inline Liouvillian build_liouvillian(const QuantumSystem& s, const DriveProgram& p) {
    check_program(s, p);
    Liouvillian lv;
    lv.dim = s.dim;
    lv.frame = p.frame;

    Matrix h = s.h0;
    if (p.frame == Frame::Rotating) h -= p.frame_frequency * s.number_operator();
    lv.l_static = -iu * (spre(h) - spost(h));
    for (const auto& j : s.jumps) {
        Matrix jdj = j.op.adjoint() * j.op;
        lv.l_static += j.rate * (kron(j.op.conjugate(), j.op) - 0.5 * (spre(jdj) + spost(jdj)));
    }

    for (const auto& a : p.assignments) {
        const Matrix& d = s.drives.at(a.channel).op;
        Liouvillian::DriveTerm term;
        term.pulse = a.pulse;
        if (p.frame == Frame::Lab) {
            term.l = iu * (spre(d) - spost(d));
        } else {
            Matrix up = detail::raising_part(d, s.excitation_number);
            Matrix g = -0.5 * (std::exp(iu * p.frame_frequency * a.pulse.center) * up).eval();
            g += g.adjoint().eval();
            term.l = -iu * (spre(g) - spost(g));
        }
        lv.terms.push_back(std::move(term));
    }
    return lv;
}

namespace detail {

struct StepWorkspace {
    Matrix m1, m2, m3, k2, k3, k4;

    void resize(int n) {
        m1.resize(n, n); m2.resize(n, n); m3.resize(n, n);
        k2.resize(n, n); k3.resize(n, n); k4.resize(n, n);
    }
};

inline void assemble(const Liouvillian& lv, double t, Matrix& out) {
    out = lv.l_static;
    for (const auto& term : lv.terms) out += lv.scalar(term, t) * term.l;
}

/// Transfer matrix of one RK4 step from t to t+dt: phi = 1 + dt/6 (K1+2K2+2K3+K4).
inline void rk4_transfer(const Liouvillian& lv, double t, double dt, Matrix& phi, StepWorkspace& w) {
    const int n = lv.dim * lv.dim;
    assemble(lv, t, w.m1);
    assemble(lv, t + 0.5 * dt, w.m2);
    assemble(lv, t + dt, w.m3);
    w.k2 = w.m2 + (0.5 * dt) * (w.m2 * w.m1);
    w.k3 = w.m2 + (0.5 * dt) * (w.m2 * w.k2);
    w.k4 = w.m3 + dt * (w.m3 * w.k3);
    phi = Matrix::Identity(n, n) + (dt / 6.0) * (w.m1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
}

}  // namespace detail

/// Advance every conditional state through the grid and report
/// tr[measure * rho_cond] at each grid point. Launch i starts at grid index
/// launches[i] from initial vector v0[i]; visit(i, k, value) is called for
/// every k >= launches[i], in ascending k per launch. Tasks are distributed
/// round-robin over threads; each task's arithmetic is identical regardless
/// of the thread count.
template <typename Visit>
void conditional_sweep(const Liouvillian& lv, const TimeGrid& grid,
                       const std::vector<int>& launches, const std::vector<CVector>& v0,
                       const Matrix& measure, int threads, Visit&& visit,
                       int block_steps = 256) {
    const int n_tasks = static_cast<int>(launches.size());
    if (n_tasks == 0) return;
    const CVector m_conj = vec(measure.transpose().eval()).conjugate();
    threads = std::max(1, threads);

    auto worker = [&](int tid) {
        std::vector<int> mine;
        for (int i = tid; i < n_tasks; i += threads) mine.push_back(i);
        if (mine.empty()) return;

        std::vector<CVector> v(mine.size());
        std::vector<Matrix> phi(block_steps);
        detail::StepWorkspace ws;
        ws.resize(lv.dim * lv.dim);

        // A launch on the final grid point only reports its diagonal value.
        for (int task : mine)
            if (launches[task] == grid.n_steps) visit(task, grid.n_steps, m_conj.dot(v0[task]));

        const int first_launch = launches[mine.front()];
        for (int b0 = 0; b0 < grid.n_steps; b0 += block_steps) {
            const int b1 = std::min(b0 + block_steps, grid.n_steps);
            if (b1 <= first_launch) continue;
            for (int k = std::max(b0, first_launch); k < b1; ++k)
                detail::rk4_transfer(lv, grid.time(k), grid.dt, phi[k - b0], ws);
            for (std::size_t si = 0; si < mine.size(); ++si) {
                const int task = mine[si];
                const int k1 = launches[task];
                if (k1 >= b1) break;  // mine[] is ascending in launch index
                if (k1 >= b0) {
                    v[si] = v0[task];
                    visit(task, k1, m_conj.dot(v[si]));
                }
                for (int k = std::max(k1, b0); k < b1; ++k) {
                    v[si] = phi[k - b0] * v[si];
                    visit(task, k + 1, m_conj.dot(v[si]));
                }
            }
        }
    };

    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }
}

}  // namespace cpcs
