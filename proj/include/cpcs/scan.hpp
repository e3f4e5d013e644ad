#pragma once

#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cpcs/regression.hpp"

namespace cpcs {

struct ScanRange {
    double t_min = 0;  // delays in a.u.
    double t_max = 0;
    double step = 0;
    bool allow_undersampled = false;

    int n_points() const {
        return static_cast<int>(std::floor((t_max - t_min) / step + 1e-9)) + 1;
    }
    double delay(int i) const { return t_min + i * step; }

    void validate(double carrier) const {
        if (step <= 0) throw std::invalid_argument("scan: step must be > 0");
        if (t_max <= t_min) throw std::invalid_argument("scan: t_max must exceed t_min");
        // Delay sampling has to Nyquist-resolve the optical carrier.
        if (!allow_undersampled && step >= M_PI / carrier)
            throw std::invalid_argument(
                "scan: step undersamples the carrier (needs < pi/omega0); "
                "set allow_undersampled to override");
    }
};

// Everything needed to evaluate one delay point: pulse i >= 1 is centered at
// first_center + T, all pulses share amplitude, duration and carrier.
struct DelayScanSetup {
    const QuantumSystem* system = nullptr;
    Pulse pulse;                // template (center ignored)
    std::vector<int> channels;  // drive channel per pulse
    double first_center = 0;
    double t_start = 0;
    double dt = 0.5;
    double pad = 0;  // window padding beyond the last pulse center
    Frame frame = Frame::Lab;
    G2Options g2;
    DetectionParams det;
    FluorescenceIntegrand integrand = FluorescenceIntegrand::ChannelSum;
    TruncationPolicy trunc;
};

inline DriveProgram make_program(const DelayScanSetup& s, double delay) {
    DriveProgram prog;
    prog.frame = s.frame;
    prog.frame_frequency = s.pulse.carrier;
    for (std::size_t i = 0; i < s.channels.size(); ++i) {
        Pulse p = s.pulse;
        p.center = i == 0 ? s.first_center : s.first_center + delay;
        prog.assignments.push_back({p, s.channels[i]});
    }
    return prog;
}

inline TimeGrid make_grid(const DelayScanSetup& s, double delay) {
    double last_center = s.first_center;
    if (s.channels.size() > 1) last_center = std::max(last_center, s.first_center + delay);
    return TimeGrid::cover(s.t_start, last_center + s.pad, s.dt);
}

inline PointResult scan_point(const DelayScanSetup& s, double delay) {
    return coincidence_point(*s.system, make_program(s, delay), make_grid(s, delay), s.g2, s.det,
                             s.integrand, s.trunc);
}

struct ScanResult {
    std::vector<double> delay;  // a.u.
    std::vector<double> c;      // coincidence rate, s^-1
    std::vector<double> f;      // fluorescence rate, s^-1
    std::vector<double> residual;

    // Aggregated propagation diagnostics over all points.
    double max_herm_defect = 0;
    double max_trace_drift = 0;
    double min_eigenvalue = 0;
    double g2_max_imag = 0;
    double g2_min_value = 0;
    double g2_max_diagonal = 0;
};

/// Delay scan with points distributed over a worker pool. Each point is
/// evaluated by exactly one worker with a fixed arithmetic sequence, and
/// results land in delay order, so the output is independent of the thread
/// count.
inline ScanResult run_delay_scan(const DelayScanSetup& setup, const ScanRange& range,
                                 int threads = 1) {
    range.validate(setup.pulse.carrier);
    const int n = range.n_points();
    ScanResult out;
    out.delay.resize(n);
    out.c.resize(n);
    out.f.resize(n);
    out.residual.resize(n);
    std::vector<PointResult> pts(n);

    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string error_msg;
    std::mutex error_mutex;

    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= n || failed.load()) break;
            try {
                pts[i] = scan_point(setup, range.delay(i));
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                failed.store(true);
                if (error_msg.empty())
                    error_msg = "scan failed at delay " + std::to_string(range.delay(i)) +
                                " a.u.: " + e.what();
            }
        }
    };

    threads = std::max(1, threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw std::runtime_error(error_msg);

    for (int i = 0; i < n; ++i) {
        out.delay[i] = range.delay(i);
        out.c[i] = pts[i].c_rate;
        out.f[i] = pts[i].f_rate;
        out.residual[i] = pts[i].residual_ratio;
        out.max_herm_defect = std::max(out.max_herm_defect, pts[i].diag.max_herm_defect);
        out.max_trace_drift = std::max(out.max_trace_drift, pts[i].diag.max_trace_drift);
        out.min_eigenvalue = std::min(out.min_eigenvalue, pts[i].diag.min_eigenvalue);
        out.g2_max_imag = std::max(out.g2_max_imag, pts[i].g2_max_imag);
        out.g2_min_value = std::min(out.g2_min_value, pts[i].g2_min_value);
        out.g2_max_diagonal = std::max(out.g2_max_diagonal, pts[i].g2_max_diagonal);
    }
    return out;
}

// --- discrete spectra ----------------------------------------------------------

enum class Window { None, Hann };

struct Spectrum {
    std::vector<double> omega;      // angular frequency, a.u., ascending from 0
    std::vector<double> magnitude;  // |DFT| of the series
    double bin = 0;
    Window window = Window::None;
    bool mean_subtracted = true;
};

/// Positive-frequency DFT magnitudes of a uniformly sampled series.
inline Spectrum spectrum(const std::vector<double>& series, double sample_step,
                         Window w = Window::None, bool subtract_mean = true) {
    const int m = static_cast<int>(series.size());
    if (m < 4) throw std::invalid_argument("spectrum: series too short");
    if (sample_step <= 0) throw std::invalid_argument("spectrum: sample step must be > 0");

    std::vector<double> y(series);
    if (subtract_mean) {
        double mean = 0;
        for (double v : y) mean += v;
        mean /= m;
        for (double& v : y) v -= mean;
    }
    if (w == Window::Hann)
        for (int k = 0; k < m; ++k)
            y[k] *= 0.5 * (1.0 - std::cos(2.0 * M_PI * k / (m - 1)));

    Spectrum s;
    s.window = w;
    s.mean_subtracted = subtract_mean;
    s.bin = 2.0 * M_PI / (m * sample_step);
    const int n_bins = m / 2 + 1;
    s.omega.resize(n_bins);
    s.magnitude.resize(n_bins);
    for (int j = 0; j < n_bins; ++j) {
        Complex c = 0;
        const double w0 = 2.0 * M_PI * j / m;
        for (int k = 0; k < m; ++k) c += y[k] * std::exp(-iu * (w0 * k));
        s.omega[j] = j * s.bin;
        s.magnitude[j] = std::abs(c);
    }
    return s;
}

inline int bin_of(const Spectrum& s, double omega) {
    int j = static_cast<int>(std::llround(omega / s.bin));
    return std::clamp(j, 0, static_cast<int>(s.omega.size()) - 1);
}

/// Index of the largest magnitude with omega in [lo, hi].
inline int max_bin_in(const Spectrum& s, double lo, double hi) {
    int best = -1;
    for (std::size_t j = 0; j < s.omega.size(); ++j)
        if (s.omega[j] >= lo && s.omega[j] <= hi &&
            (best < 0 || s.magnitude[j] > s.magnitude[best]))
            best = static_cast<int>(j);
    if (best < 0) throw std::invalid_argument("max_bin_in: empty frequency window");
    return best;
}

/// Interior local maxima with omega in [lo, hi], ascending.
inline std::vector<int> local_maxima_in(const Spectrum& s, double lo, double hi) {
    std::vector<int> out;
    for (int j = 1; j + 1 < static_cast<int>(s.omega.size()); ++j)
        if (s.omega[j] >= lo && s.omega[j] <= hi && s.magnitude[j] > s.magnitude[j - 1] &&
            s.magnitude[j] >= s.magnitude[j + 1])
            out.push_back(j);
    return out;
}

/// Sub-bin peak position by quadratic interpolation around bin j.
inline double interpolated_peak_omega(const Spectrum& s, int j) {
    if (j <= 0 || j + 1 >= static_cast<int>(s.magnitude.size())) return s.omega.at(j);
    const double a = s.magnitude[j - 1], b = s.magnitude[j], c = s.magnitude[j + 1];
    const double denom = a - 2.0 * b + c;
    double shift = 0.0;
    if (std::abs(denom) > 1e-300) shift = 0.5 * (a - c) / denom;
    shift = std::clamp(shift, -0.5, 0.5);
    return (j + shift) * s.bin;
}

}  // namespace cpcs
