#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "cpcs/lindblad.hpp"

// Monte-Carlo wave-function unraveling of the master equation. Used as an
// independent cross-check of the regression-based coincidence numbers, not as
// a production path.

namespace cpcs {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Counter-based generator: the i-th draw is a hash of (stream, i), so each
// trajectory is reproducible independently of scheduling.
class CounterRng {
  public:
    CounterRng(std::uint64_t master_seed, std::uint64_t stream)
        : stream_(detail::splitmix64(master_seed ^ detail::splitmix64(stream))) {}

    double uniform() {
        const std::uint64_t bits = detail::splitmix64(stream_ + counter_++);
        return static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0, 1)
    }

  private:
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

struct ClickRecord {
    double time;
    int channel;
};

struct McOptions {
    int n_traj = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    bool record_clicks = false;
    int mean_state_index = -1;  // grid index at which to average |psi><psi|, -1 disables
};

struct McResult {
    double p1 = 0, se_p1 = 0;          // P(>=1 click) and its standard error
    double p2 = 0, se_p2 = 0;          // P(>=2 clicks)
    double mean_pairs = 0, se_pairs = 0;  // mean ordered photon pairs k(k-1)/2 per cycle
    long total_clicks = 0;
    int n_traj = 0;
    double max_step_jump_probability = 0;  // should stay well below 0.01
    std::vector<std::vector<ClickRecord>> clicks;  // per trajectory, if recorded
    Matrix mean_state;                             // ensemble average at mean_state_index
};

/// First-order jump unraveling on the propagation grid: per step, jump with
/// probability sum_i gamma_i <J_i'J_i> dt (channel chosen proportionally),
/// otherwise advance the normalized state one RK4 step under the drift
/// Hamiltonian H - i/2 sum gamma J'J.
inline McResult mc_coincidence(const QuantumSystem& s, const DriveProgram& p, const TimeGrid& grid,
                               const CVector& initial, const McOptions& opt) {
    check_program(s, p);
    if (opt.n_traj < 1) throw std::invalid_argument("mc: n_traj must be >= 1");
    if (initial.size() != s.dim) throw std::invalid_argument("mc: initial state dimension mismatch");

    Matrix drift_decay = Matrix::Zero(s.dim, s.dim);
    for (const auto& j : s.jumps) drift_decay += j.rate * (j.op.adjoint() * j.op);
    Matrix h_frame = s.h0;
    if (p.frame == Frame::Rotating) h_frame -= p.frame_frequency * s.number_operator();

    // Constant and per-assignment drive parts of the non-Hermitian drift
    // generator, so the inner loop is pure mat-vec work.
    const Matrix drift0 = (-iu * h_frame - 0.5 * drift_decay).eval();
    std::vector<Matrix> drive_mats;
    for (const auto& a : p.assignments) {
        const Matrix& d = s.drives.at(a.channel).op;
        if (p.frame == Frame::Lab) {
            drive_mats.push_back((iu * d).eval());  // -i * (-E(t) D) per unit field
        } else {
            Matrix up = detail::raising_part(d, s.excitation_number);
            Matrix g = -0.5 * (std::exp(iu * p.frame_frequency * a.pulse.center) * up).eval();
            g += g.adjoint().eval();
            drive_mats.push_back((-iu * g).eval());
        }
    }
    // Field scalars at t, t+dt/2, t+dt for every step, shared by all
    // trajectories.
    const int n_asn = static_cast<int>(p.assignments.size());
    std::vector<double> field(3 * static_cast<std::size_t>(grid.n_steps) * std::max(n_asn, 1));
    for (int k = 0; k < grid.n_steps; ++k) {
        const double t = grid.time(k);
        for (int a = 0; a < n_asn; ++a) {
            const Pulse& pu = p.assignments[a].pulse;
            auto scalar = [&](double tt) {
                return p.frame == Frame::Lab ? pulse_field(pu, tt) : pulse_envelope(pu, tt);
            };
            field[(3 * k + 0) * n_asn + a] = scalar(t);
            field[(3 * k + 1) * n_asn + a] = scalar(t + 0.5 * grid.dt);
            field[(3 * k + 2) * n_asn + a] = scalar(t + grid.dt);
        }
    }
    double drive_end = grid.t_start;
    for (const auto& a : p.assignments)
        drive_end = std::max(drive_end, a.pulse.center + 8.0 * a.pulse.fwhm);

    std::vector<Matrix> jdj;  // rate-weighted J'J per channel
    for (const auto& j : s.jumps) jdj.push_back((j.rate * (j.op.adjoint() * j.op)).eval());

    const int n_ch = static_cast<int>(s.jumps.size());
    const bool want_mean = opt.mean_state_index >= 0;

    struct Partial {
        long n1 = 0, n2 = 0, clicks = 0;
        double pairs = 0, pairs_sq = 0, pmax = 0;
        Matrix mean_state;
    };
    const int threads = std::max(1, opt.threads);
    std::vector<Partial> partials(threads);
    std::vector<std::vector<ClickRecord>> clicks_by_traj;
    if (opt.record_clicks) clicks_by_traj.resize(opt.n_traj);

    auto run_block = [&](int tid) {
        Partial& acc = partials[tid];
        if (want_mean) acc.mean_state = Matrix::Zero(s.dim, s.dim);
        std::vector<double> pjump(n_ch);
        CVector w(s.dim), k1(s.dim), k2(s.dim), k3(s.dim), k4(s.dim);
        CVector stage(s.dim), dw(s.dim);
        auto drift = [&](const CVector& in, const double* f, CVector& out) {
            out.noalias() = drift0 * in;
            for (int a = 0; a < n_asn; ++a) {
                dw.noalias() = drive_mats[a] * in;
                out += f[a] * dw;
            }
        };
        for (int traj = tid; traj < opt.n_traj; traj += threads) {
            CounterRng rng(opt.seed, static_cast<std::uint64_t>(traj));
            CVector psi = initial.normalized();
            int clicks = 0;
            std::vector<ClickRecord> rec;
            for (int k = 0; k < grid.n_steps; ++k) {
                if (want_mean && k == opt.mean_state_index) acc.mean_state += psi * psi.adjoint();
                const double t = grid.time(k);
                double ptot = 0;
                for (int c = 0; c < n_ch; ++c) {
                    w.noalias() = jdj[c] * psi;
                    pjump[c] = psi.dot(w).real() * grid.dt;
                    ptot += pjump[c];
                }
                acc.pmax = std::max(acc.pmax, ptot);
                // Once the pulses are over and no excitation is left, nothing
                // can click any more; the remaining window is inert.
                if (!want_mean && t > drive_end && ptot < 1e-18 * grid.dt) break;
                const double u = rng.uniform();
                if (u < ptot) {
                    double cum = 0;
                    int chosen = n_ch - 1;
                    for (int c = 0; c < n_ch; ++c) {
                        cum += pjump[c];
                        if (u < cum) { chosen = c; break; }
                    }
                    w.noalias() = s.jumps[chosen].op * psi;
                    psi = w.normalized();
                    ++clicks;
                    if (opt.record_clicks) rec.push_back({t, chosen});
                } else {
                    const double* f = &field[static_cast<std::size_t>(3 * k) * n_asn];
                    drift(psi, f, k1);
                    stage = psi + (0.5 * grid.dt) * k1;
                    drift(stage, f + n_asn, k2);
                    stage = psi + (0.5 * grid.dt) * k2;
                    drift(stage, f + n_asn, k3);
                    stage = psi + grid.dt * k3;
                    drift(stage, f + 2 * n_asn, k4);
                    psi += (grid.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                    psi.normalize();
                }
            }
            if (want_mean && opt.mean_state_index == grid.n_steps)
                acc.mean_state += psi * psi.adjoint();
            const double pairs = 0.5 * static_cast<double>(clicks) * (clicks - 1);
            acc.n1 += clicks >= 1;
            acc.n2 += clicks >= 2;
            acc.clicks += clicks;
            acc.pairs += pairs;
            acc.pairs_sq += pairs * pairs;
            if (opt.record_clicks) clicks_by_traj[traj] = std::move(rec);
        }
    };

    if (threads == 1) {
        run_block(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(run_block, t);
        for (auto& th : pool) th.join();
    }

    McResult r;
    r.n_traj = opt.n_traj;
    long n1 = 0, n2 = 0;
    double pairs = 0, pairs_sq = 0;
    if (want_mean) r.mean_state = Matrix::Zero(s.dim, s.dim);
    for (auto& part : partials) {
        n1 += part.n1;
        n2 += part.n2;
        r.total_clicks += part.clicks;
        pairs += part.pairs;
        pairs_sq += part.pairs_sq;
        r.max_step_jump_probability = std::max(r.max_step_jump_probability, part.pmax);
        if (want_mean) r.mean_state += part.mean_state;
    }
    r.clicks = std::move(clicks_by_traj);
    const double n = static_cast<double>(opt.n_traj);
    r.p1 = n1 / n;
    r.p2 = n2 / n;
    r.se_p1 = std::sqrt(std::max(r.p1 * (1.0 - r.p1), 0.0) / n);
    r.se_p2 = std::sqrt(std::max(r.p2 * (1.0 - r.p2), 0.0) / n);
    r.mean_pairs = pairs / n;
    const double var = std::max(pairs_sq / n - r.mean_pairs * r.mean_pairs, 0.0);
    r.se_pairs = std::sqrt(var / n);
    if (want_mean) r.mean_state /= n;
    return r;
}

}  // namespace cpcs
