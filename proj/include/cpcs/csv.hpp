#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpcs/regression.hpp"
#include "cpcs/scan.hpp"
#include "cpcs/trajectory.hpp"
#include "cpcs/units.hpp"

namespace cpcs {

/// Locale-independent general-format number with the given significant digits.
inline std::string format_sig(double v, int sig_digits) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, sig_digits);
    if (res.ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf, res.ptr);
}

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-stable across platforms
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline std::vector<std::string> csv_header(const std::string& hash, const std::string& config_echo) {
    return {"# config_hash=" + hash, "# config=" + config_echo};
}

inline void write_scan_csv(const std::string& path, const ScanResult& scan,
                           const std::vector<std::string>& header, int precision) {
    std::vector<std::string> lines = header;
    lines.push_back("T_fs,c_Hz,f_Hz");
    for (std::size_t i = 0; i < scan.delay.size(); ++i)
        lines.push_back(format_sig(units::au_to_fs(scan.delay[i]), precision) + "," +
                        format_sig(scan.c[i], precision) + "," +
                        format_sig(scan.f[i], precision));
    write_lines(path, lines);
}

/// Triangular map in t1-major row order; t2 may be decimated for export.
inline void write_map_csv(const std::string& path, const CorrelationMap& map,
                          const std::vector<std::string>& header, int precision,
                          int t2_stride = 1) {
    if (t2_stride < 1) throw std::invalid_argument("map export: t2 stride must be >= 1");
    std::vector<std::string> lines = header;
    lines.push_back("t1_fs,t2_fs,value");
    for (int i = 0; i < map.n_rows(); ++i) {
        const int k1 = map.t1_indices[i];
        const std::string t1 = format_sig(units::au_to_fs(map.grid.time(k1)), precision);
        const auto& row = map.rows[i];
        for (std::size_t j = 0; j < row.size(); j += t2_stride)
            lines.push_back(t1 + "," +
                            format_sig(units::au_to_fs(map.grid.time(k1 + static_cast<int>(j))),
                                       precision) +
                            "," + format_sig(row[j], precision));
    }
    write_lines(path, lines);
}

inline void write_spectrum_csv(const std::string& path, const Spectrum& spec,
                               const std::vector<std::string>& header, int precision) {
    std::vector<std::string> lines = header;
    lines.push_back("omega_au,omega_eV,magnitude");
    for (std::size_t j = 0; j < spec.omega.size(); ++j)
        lines.push_back(format_sig(spec.omega[j], precision) + "," +
                        format_sig(units::au_to_ev(spec.omega[j]), precision) + "," +
                        format_sig(spec.magnitude[j], precision));
    write_lines(path, lines);
}

inline void write_clicks_csv(const std::string& path,
                             const std::vector<std::vector<ClickRecord>>& clicks,
                             const std::vector<std::string>& header, int precision) {
    std::vector<std::string> lines = header;
    lines.push_back("trajectory_id,time_fs,channel_id");
    for (std::size_t i = 0; i < clicks.size(); ++i)
        for (const auto& rec : clicks[i])
            lines.push_back(std::to_string(i) + "," +
                            format_sig(units::au_to_fs(rec.time), precision) + "," +
                            std::to_string(rec.channel));
    write_lines(path, lines);
}

struct ScanCsv {
    std::vector<double> t_fs, c_hz, f_hz;
    std::vector<std::string> comments;
};

inline ScanCsv read_scan_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    ScanCsv out;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            out.comments.push_back(line);
            continue;
        }
        if (!header_seen) {  // column header
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::string field;
        std::vector<double> vals;
        while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
        if (vals.size() != 3) throw std::runtime_error("malformed scan CSV line: " + line);
        out.t_fs.push_back(vals[0]);
        out.c_hz.push_back(vals[1]);
        out.f_hz.push_back(vals[2]);
    }
    if (out.t_fs.empty()) throw std::runtime_error("scan CSV has no data rows: " + path);
    return out;
}

/// Sample step of a uniform series; throws if the spacing wanders.
inline double uniform_step(const std::vector<double>& x, double rel_tol = 1e-6) {
    if (x.size() < 2) throw std::invalid_argument("need at least two samples");
    const double step = x[1] - x[0];
    for (std::size_t i = 1; i + 1 < x.size(); ++i)
        if (std::abs((x[i + 1] - x[i]) - step) > rel_tol * std::abs(step))
            throw std::invalid_argument("non-uniform sampling detected");
    return step;
}

}  // namespace cpcs
