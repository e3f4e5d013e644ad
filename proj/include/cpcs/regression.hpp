#pragma once

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "cpcs/lindblad.hpp"
#include "cpcs/superop.hpp"

namespace cpcs {

struct DetectionParams {
    double eta_c = 1.0;      // coincidence detection efficiency
    double eta_f = 1.0;      // fluorescence detection efficiency
    double rep_rate_hz = 1;  // excitation repetition rate, s^-1
    double gamma_f = 0;      // radiative rate entering the count-rate prefactors, a.u.
};

inline void check_detection(const DetectionParams& d) {
    if (d.eta_c < 0 || d.eta_c > 1 || d.eta_f < 0 || d.eta_f > 1)
        throw std::invalid_argument("detection: efficiencies must lie in [0,1]");
    if (d.rep_rate_hz <= 0) throw std::invalid_argument("detection: repetition rate must be > 0");
    if (d.gamma_f <= 0) throw std::invalid_argument("detection: gamma_f must be > 0");
}

// The fluorescence integrand. ChannelSum adds the per-channel intensities
// sum_i <J_i' J_i>; photons from orthogonally polarized channels add in
// intensity, which keeps the two-pulse fluorescence yield free of optical
// interference. EmissionOp uses <a'a> with the coherent channel sum a and is
// kept for comparison studies.
enum class FluorescenceIntegrand { ChannelSum, EmissionOp };

/// Conditional state right after a detection event: a rho a'. Unnormalized,
/// its trace is the emission likelihood <a'a> of rho.
inline DensityMatrix apply_emission_jump(const Matrix& a, const Matrix& rho) {
    if (a.rows() != rho.rows() || a.cols() != rho.cols())
        throw std::invalid_argument("apply_emission_jump: dimension mismatch");
    return {a * rho * a.adjoint(), false};
}

struct CorrelationMap {
    TimeGrid grid;
    int t1_stride = 1;
    double delay = 0;  // metadata: inter-pulse delay of the run
    std::vector<int> t1_indices;             // ascending grid indices of the launches
    std::vector<std::vector<double>> rows;   // rows[i][j] = G2(t1_i, t_{k_i + j})
    double max_imag_residue = 0;
    double min_value = 0;

    double t1_time(int i) const { return grid.time(t1_indices.at(i)); }
    int n_rows() const { return static_cast<int>(rows.size()); }
    double value(int i, int grid_index) const {
        return rows.at(i).at(grid_index - t1_indices.at(i));
    }
};

struct G2Options {
    int t1_stride = 0;           // 0: choose so that at most max_launches rows run
    int max_launches = 2000;
    int threads = 1;
    int block_steps = 256;
};

namespace detail {

inline std::vector<int> launch_indices(int n_steps, int stride) {
    if (stride < 1) throw std::invalid_argument("g2: stride must be >= 1");
    std::vector<int> idx;
    for (int k = 0; k <= n_steps; k += stride) idx.push_back(k);
    if (idx.back() != n_steps) idx.push_back(n_steps);  // keep the window end covered
    return idx;
}

inline int auto_stride(int n_steps, int max_launches) {
    return std::max(1, (n_steps + max_launches) / max_launches);
}

/// Composite trapezoid over one G2 row (uniform spacing dt, diagonal and end
/// cells at half weight). A single-cell row has zero width.
inline double row_trapezoid(const double* row, int len, double dt) {
    if (len < 2) return 0.0;
    double s = 0.5 * row[0];
    for (int j = 1; j < len - 1; ++j) s += row[j];
    s += 0.5 * row[len - 1];
    return s * dt;
}

/// Trapezoid over the (possibly non-uniform) t1 launch times.
inline double t1_combine(const std::vector<double>& row_integrals,
                         const std::vector<double>& t1_times) {
    const int k = static_cast<int>(row_integrals.size());
    if (k < 2) return 0.0;
    double total = 0;
    for (int i = 0; i < k; ++i) {
        const double hi = (i + 1 < k) ? t1_times[i + 1] : t1_times[i];
        const double lo = (i > 0) ? t1_times[i - 1] : t1_times[i];
        total += 0.5 * (hi - lo) * row_integrals[i];
    }
    return total;
}

struct G2Setup {
    std::vector<int> launches;
    std::vector<CVector> v0;
    Matrix measure;  // a'a
};

inline G2Setup g2_setup(const QuantumSystem& s, const DensityTrajectory& traj, int stride) {
    G2Setup g;
    g.launches = launch_indices(traj.grid.n_steps, stride);
    g.v0.reserve(g.launches.size());
    for (int k : g.launches)
        g.v0.push_back(vec(apply_emission_jump(s.emission_op, traj.state(k)).mat));
    g.measure = s.emission_op.adjoint() * s.emission_op;
    return g;
}

}  // namespace detail

/// Two-time correlation G2(t1, t2) on the triangular grid t2 >= t1, one row
/// per strided launch point t1. The unconditional trajectory is propagated
/// internally unless one is supplied.
inline CorrelationMap g2_grid(const QuantumSystem& s, const DriveProgram& p, const TimeGrid& grid,
                              const G2Options& opt = {},
                              const DensityTrajectory* precomputed = nullptr) {
    if (grid.n_steps < 1) throw std::invalid_argument("g2_grid: empty grid");
    DensityTrajectory local;
    const DensityTrajectory* traj = precomputed;
    if (!traj) {
        local = propagate(s, p, DensityMatrix::ground(s.dim), grid);
        traj = &local;
    }
    const int stride =
        opt.t1_stride > 0 ? opt.t1_stride : detail::auto_stride(grid.n_steps, opt.max_launches);
    auto setup = detail::g2_setup(s, *traj, stride);
    const Liouvillian lv = build_liouvillian(s, p);

    CorrelationMap map;
    map.grid = grid;
    map.t1_stride = stride;
    map.t1_indices = setup.launches;
    map.rows.resize(setup.launches.size());
    for (std::size_t i = 0; i < setup.launches.size(); ++i)
        map.rows[i].assign(grid.n_steps + 1 - setup.launches[i], 0.0);

    std::vector<double> imag_res(setup.launches.size(), 0.0);
    std::vector<double> min_val(setup.launches.size(), 0.0);
    conditional_sweep(
        lv, grid, setup.launches, setup.v0, setup.measure, opt.threads,
        [&](int task, int k, Complex g) {
            map.rows[task][k - setup.launches[task]] = g.real();
            imag_res[task] = std::max(imag_res[task], std::abs(g.imag()));
            min_val[task] = std::min(min_val[task], g.real());
        },
        opt.block_steps);
    for (double r : imag_res) map.max_imag_residue = std::max(map.max_imag_residue, r);
    for (double v : min_val) map.min_value = std::min(map.min_value, v);
    return map;
}

/// Per-cell coincidence probability p(t1,t2) = G2 * (gamma_f * dt)^2.
inline CorrelationMap coincidence_probability_map(const CorrelationMap& map, double gamma_f,
                                                  double dt) {
    CorrelationMap p = map;
    const double scale = gamma_f * gamma_f * dt * dt;
    for (auto& row : p.rows)
        for (double& v : row) v *= scale;
    return p;
}

/// Coincidence count rate c = eta_c^2 nu_rep gamma_f^2 * double integral of G2
/// over the triangular window.
inline double coincidence_rate(const CorrelationMap& map, const DetectionParams& det) {
    check_detection(det);
    std::vector<double> row_integrals(map.rows.size());
    std::vector<double> t1_times(map.rows.size());
    for (std::size_t i = 0; i < map.rows.size(); ++i) {
        row_integrals[i] = detail::row_trapezoid(map.rows[i].data(),
                                                 static_cast<int>(map.rows[i].size()), map.grid.dt);
        t1_times[i] = map.t1_time(static_cast<int>(i));
    }
    const double pairs = detail::t1_combine(row_integrals, t1_times);
    return det.eta_c * det.eta_c * det.rep_rate_hz * det.gamma_f * det.gamma_f * pairs;
}

/// Fluorescence count rate f = eta_f nu_rep gamma_f * time integral of the
/// emission intensity along the unconditional trajectory.
inline double fluorescence_rate(const DensityTrajectory& traj, const QuantumSystem& s,
                                const DetectionParams& det,
                                FluorescenceIntegrand integrand = FluorescenceIntegrand::ChannelSum) {
    check_detection(det);
    const int n = traj.grid.n_points();
    if (n < 2) return 0.0;
    double sum = 0;
    if (integrand == FluorescenceIntegrand::ChannelSum) {
        sum = 0.5 * traj.emission_expect.front();
        for (int k = 1; k < n - 1; ++k) sum += traj.emission_expect[k];
        sum += 0.5 * traj.emission_expect.back();
    } else {
        const Matrix ada = s.emission_op.adjoint() * s.emission_op;
        auto expect = [&](int k) { return (ada * traj.state(k)).trace().real(); };
        sum = 0.5 * expect(0);
        for (int k = 1; k < n - 1; ++k) sum += expect(k);
        sum += 0.5 * expect(n - 1);
    }
    return det.eta_f * det.rep_rate_hz * det.gamma_f * sum * traj.grid.dt;
}

struct TruncationPolicy {
    double tolerance = 1e-4;  // allowed final/peak excitation ratio
    bool strict = true;       // true: throw, false: warn on stderr
};

inline double truncation_residual(const DensityTrajectory& traj) {
    const double peak = traj.diag.peak_excitation;
    return peak > 0 ? traj.diag.final_excitation / peak : 0.0;
}

inline void check_truncation(double residual_ratio, const TruncationPolicy& pol) {
    if (residual_ratio <= pol.tolerance) return;
    if (pol.strict)
        throw std::runtime_error("integration window too short: residual excitation ratio " +
                                 std::to_string(residual_ratio));
    std::cerr << "warning: residual excitation ratio " << residual_ratio
              << " exceeds tolerance " << pol.tolerance << "\n";
}

// One full coincidence/fluorescence evaluation for a fixed drive program.
// Streams the G2 rows directly into the triangular integral (identical
// arithmetic to materializing a CorrelationMap and integrating it) so delay
// scans stay within a few MB per worker.
struct PointResult {
    double c_rate = 0;
    double f_rate = 0;
    double residual_ratio = 0;
    double g2_max_imag = 0;
    double g2_min_value = 0;
    double g2_max_diagonal = 0;  // max |G2(t1,t1)| over launches
    TrajectoryDiagnostics diag;
};

inline PointResult coincidence_point(const QuantumSystem& s, const DriveProgram& p,
                                     const TimeGrid& grid, const G2Options& opt,
                                     const DetectionParams& det,
                                     FluorescenceIntegrand integrand = FluorescenceIntegrand::ChannelSum,
                                     const TruncationPolicy& trunc = {}) {
    check_detection(det);
    DensityTrajectory traj = propagate(s, p, DensityMatrix::ground(s.dim), grid);

    PointResult res;
    res.diag = traj.diag;
    res.residual_ratio = truncation_residual(traj);
    check_truncation(res.residual_ratio, trunc);
    res.f_rate = fluorescence_rate(traj, s, det, integrand);

    const int stride =
        opt.t1_stride > 0 ? opt.t1_stride : detail::auto_stride(grid.n_steps, opt.max_launches);
    auto setup = detail::g2_setup(s, traj, stride);
    const Liouvillian lv = build_liouvillian(s, p);
    const int n_tasks = static_cast<int>(setup.launches.size());

    std::vector<double> acc(n_tasks, 0.0);
    std::vector<double> imag_res(n_tasks, 0.0);
    std::vector<double> min_val(n_tasks, 0.0);
    std::vector<double> diag_val(n_tasks, 0.0);
    conditional_sweep(
        lv, grid, setup.launches, setup.v0, setup.measure, opt.threads,
        [&](int task, int k, Complex g) {
            const double gr = g.real();
            imag_res[task] = std::max(imag_res[task], std::abs(g.imag()));
            min_val[task] = std::min(min_val[task], gr);
            const int k1 = setup.launches[task];
            if (k == k1) {
                diag_val[task] = std::abs(gr);
                if (k1 != grid.n_steps) acc[task] = 0.5 * gr;
            } else if (k == grid.n_steps) {
                acc[task] += 0.5 * gr;
            } else {
                acc[task] += gr;
            }
        },
        opt.block_steps);

    std::vector<double> row_integrals(n_tasks);
    std::vector<double> t1_times(n_tasks);
    for (int i = 0; i < n_tasks; ++i) {
        row_integrals[i] = acc[i] * grid.dt;
        t1_times[i] = grid.time(setup.launches[i]);
        res.g2_max_imag = std::max(res.g2_max_imag, imag_res[i]);
        res.g2_min_value = std::min(res.g2_min_value, min_val[i]);
        res.g2_max_diagonal = std::max(res.g2_max_diagonal, diag_val[i]);
    }
    const double pairs = detail::t1_combine(row_integrals, t1_times);
    res.c_rate = det.eta_c * det.eta_c * det.rep_rate_hz * det.gamma_f * det.gamma_f * pairs;
    return res;
}

}  // namespace cpcs
