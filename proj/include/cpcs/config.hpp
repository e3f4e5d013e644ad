#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpcs/models.hpp"
#include "cpcs/scan.hpp"
#include "cpcs/units.hpp"

namespace cpcs {

using Json = nlohmann::json;

enum class Dimension { Plain, Energy, Time, Field, Dipole, RateAu, FrequencySI };

namespace detail {

inline std::runtime_error config_error(const std::string& path, const std::string& msg) {
    return std::runtime_error("config: " + path + ": " + msg);
}

/// Convert "VALUE UNIT" (space optional) to the internal unit of the given
/// dimension: a.u. everywhere except repetition rates, which stay in s^-1.
inline double quantity_from_string(const std::string& text, Dimension dim,
                                   const std::string& path) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin) throw config_error(path, "expected a number in '" + text + "'");
    std::string unit(end);
    while (!unit.empty() && std::isspace(static_cast<unsigned char>(unit.front()))) unit.erase(0, 1);
    while (!unit.empty() && std::isspace(static_cast<unsigned char>(unit.back()))) unit.pop_back();
    if (unit.empty() || unit == "au" || unit == "a.u.") {
        if (dim == Dimension::FrequencySI)
            throw config_error(path, "repetition rates take SI units (Hz, MHz, s^-1)");
        return value;
    }

    auto bad_unit = [&]() { return config_error(path, "unit '" + unit + "' not valid here"); };
    switch (dim) {
        case Dimension::Plain:
            throw bad_unit();
        case Dimension::Energy:
        case Dimension::RateAu:
            if (unit == "eV") return units::ev_to_au(value);
            if (unit == "meV") return units::ev_to_au(value * 1e-3);
            if (unit == "Hz" || unit == "s^-1") return units::hz_to_au(value);
            if (unit == "THz") return units::hz_to_au(value * 1e12);
            throw bad_unit();
        case Dimension::Time:
            if (unit == "fs") return units::fs_to_au(value);
            if (unit == "ps") return units::fs_to_au(value * 1e3);
            throw bad_unit();
        case Dimension::Field:
            if (unit == "V_per_m" || unit == "V/m") return units::vpm_to_au(value);
            throw bad_unit();
        case Dimension::Dipole:
            if (unit == "D" || unit == "Debye") return units::debye_to_au(value);
            throw bad_unit();
        case Dimension::FrequencySI:
            if (unit == "Hz" || unit == "s^-1") return value;
            if (unit == "kHz") return value * 1e3;
            if (unit == "MHz") return value * 1e6;
            if (unit == "GHz") return value * 1e9;
            if (unit == "THz") return value * 1e12;
            throw bad_unit();
    }
    throw bad_unit();
}

inline double parse_quantity(const Json& j, Dimension dim, const std::string& path) {
    if (j.is_number()) {
        if (dim == Dimension::FrequencySI) return j.get<double>();  // bare number = s^-1
        return j.get<double>();                                     // bare number = a.u.
    }
    if (j.is_string()) return quantity_from_string(j.get<std::string>(), dim, path);
    throw config_error(path, "expected a number or a 'value unit' string");
}

inline void require_keys(const Json& obj, const std::vector<std::string>& allowed,
                         const std::string& path) {
    if (!obj.is_object()) throw config_error(path, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const auto& k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known) throw config_error(path + "." + it.key(), "unknown key");
    }
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw config_error(path + "." + key, "missing required key");
    return *it;
}

}  // namespace detail

struct ModelConfig {
    std::string kind;  // tls | exciton_biexciton | coupled_emitters
    double omega = 0;  // tls
    double omega_x = 0, delta = 0;       // exciton_biexciton
    double omega1 = 0, omega2 = 0, g = 0;  // coupled_emitters
    double gamma = 0, mu = 0;            // shared
};

struct PulsesConfig {
    double amplitude = 0;
    double duration = 0;      // FWHM, a.u.
    double carrier = 0;       // a.u.
    double first_center = 0;  // a.u.
    std::vector<std::string> channels;  // one drive channel per pulse
};

struct DetectionConfig {
    double eta_c = 0.2, eta_f = 0.2;
    double rep_rate_hz = 1e8;
    double gamma_f = -1;  // <0: use the model gamma
    std::string fluorescence_integrand = "channel_sum";
    std::vector<std::string> coincidence_channels;  // empty: all jump channels
};

struct NumericsConfig {
    double dt = 0.5;
    double t_start = 0;
    double pad = -1;  // <0: 12 / gamma
    int t1_stride = 0;  // 0: auto, at most 2000 launches
    std::string frame = "lab";
    std::string truncation_policy = "error";
    double truncation_tolerance = 1e-4;
};

struct ScanBlock {
    double t_min = 0, t_max = 0, step = 0;
    bool allow_undersampled = false;
};

struct OutputConfig {
    std::string directory = "out";
    int precision = 9;
};

struct RunConfig {
    ModelConfig model;
    PulsesConfig pulses;
    DetectionConfig detection;
    NumericsConfig numerics;
    std::optional<ScanBlock> scan;
    OutputConfig output;
};

inline RunConfig parse_config(const std::string& text) {
    Json root = Json::parse(text);
    detail::require_keys(root, {"model", "pulses", "detection", "numerics", "scan", "output"}, "$");
    using detail::parse_quantity;
    using detail::require;

    RunConfig cfg;

    const Json& m = require(root, "model", "$");
    cfg.model.kind = require(m, "kind", "model").get<std::string>();
    if (cfg.model.kind == "tls") {
        detail::require_keys(m, {"kind", "omega", "gamma", "mu"}, "model");
        cfg.model.omega = parse_quantity(require(m, "omega", "model"), Dimension::Energy, "model.omega");
    } else if (cfg.model.kind == "exciton_biexciton") {
        detail::require_keys(m, {"kind", "omega_x", "delta", "gamma", "mu"}, "model");
        cfg.model.omega_x =
            parse_quantity(require(m, "omega_x", "model"), Dimension::Energy, "model.omega_x");
        cfg.model.delta = parse_quantity(require(m, "delta", "model"), Dimension::Energy, "model.delta");
    } else if (cfg.model.kind == "coupled_emitters") {
        detail::require_keys(m, {"kind", "omega1", "omega2", "g", "gamma", "mu"}, "model");
        cfg.model.omega1 = parse_quantity(require(m, "omega1", "model"), Dimension::Energy, "model.omega1");
        cfg.model.omega2 = parse_quantity(require(m, "omega2", "model"), Dimension::Energy, "model.omega2");
        cfg.model.g = parse_quantity(require(m, "g", "model"), Dimension::Energy, "model.g");
    } else {
        throw detail::config_error("model.kind", "unknown model '" + cfg.model.kind + "'");
    }
    cfg.model.gamma = parse_quantity(require(m, "gamma", "model"), Dimension::RateAu, "model.gamma");
    cfg.model.mu = parse_quantity(require(m, "mu", "model"), Dimension::Dipole, "model.mu");

    const Json& p = require(root, "pulses", "$");
    detail::require_keys(p, {"amplitude", "duration", "carrier", "first_center", "channels"}, "pulses");
    cfg.pulses.amplitude =
        parse_quantity(require(p, "amplitude", "pulses"), Dimension::Field, "pulses.amplitude");
    cfg.pulses.duration =
        parse_quantity(require(p, "duration", "pulses"), Dimension::Time, "pulses.duration");
    cfg.pulses.carrier =
        parse_quantity(require(p, "carrier", "pulses"), Dimension::Energy, "pulses.carrier");
    cfg.pulses.first_center =
        parse_quantity(require(p, "first_center", "pulses"), Dimension::Time, "pulses.first_center");
    const Json& ch = require(p, "channels", "pulses");
    if (!ch.is_array() || ch.empty()) throw detail::config_error("pulses.channels", "expected a non-empty array");
    for (const auto& c : ch) cfg.pulses.channels.push_back(c.get<std::string>());

    const Json& d = require(root, "detection", "$");
    detail::require_keys(d,
                         {"eta_c", "eta_f", "rep_rate", "gamma_f", "fluorescence_integrand",
                          "coincidence_channels"},
                         "detection");
    cfg.detection.eta_c = parse_quantity(require(d, "eta_c", "detection"), Dimension::Plain, "detection.eta_c");
    cfg.detection.eta_f = parse_quantity(require(d, "eta_f", "detection"), Dimension::Plain, "detection.eta_f");
    cfg.detection.rep_rate_hz =
        parse_quantity(require(d, "rep_rate", "detection"), Dimension::FrequencySI, "detection.rep_rate");
    if (d.contains("gamma_f") && !(d["gamma_f"].is_string() && d["gamma_f"] == "auto"))
        cfg.detection.gamma_f = parse_quantity(d["gamma_f"], Dimension::RateAu, "detection.gamma_f");
    if (d.contains("fluorescence_integrand")) {
        cfg.detection.fluorescence_integrand = d["fluorescence_integrand"].get<std::string>();
        if (cfg.detection.fluorescence_integrand != "channel_sum" &&
            cfg.detection.fluorescence_integrand != "emission_op")
            throw detail::config_error("detection.fluorescence_integrand",
                                       "expected channel_sum or emission_op");
    }
    if (d.contains("coincidence_channels"))
        for (const auto& c : d["coincidence_channels"])
            cfg.detection.coincidence_channels.push_back(c.get<std::string>());

    if (root.contains("numerics")) {
        const Json& n = root["numerics"];
        detail::require_keys(n,
                             {"dt", "t_start", "pad", "t1_stride", "frame", "truncation_policy",
                              "truncation_tolerance"},
                             "numerics");
        if (n.contains("dt")) cfg.numerics.dt = parse_quantity(n["dt"], Dimension::Time, "numerics.dt");
        if (n.contains("t_start"))
            cfg.numerics.t_start = parse_quantity(n["t_start"], Dimension::Time, "numerics.t_start");
        if (n.contains("pad") && !(n["pad"].is_string() && n["pad"] == "auto"))
            cfg.numerics.pad = parse_quantity(n["pad"], Dimension::Time, "numerics.pad");
        if (n.contains("t1_stride")) cfg.numerics.t1_stride = n["t1_stride"].get<int>();
        if (n.contains("frame")) {
            cfg.numerics.frame = n["frame"].get<std::string>();
            if (cfg.numerics.frame != "lab" && cfg.numerics.frame != "rotating")
                throw detail::config_error("numerics.frame", "expected lab or rotating");
        }
        if (n.contains("truncation_policy")) {
            cfg.numerics.truncation_policy = n["truncation_policy"].get<std::string>();
            if (cfg.numerics.truncation_policy != "error" && cfg.numerics.truncation_policy != "warn")
                throw detail::config_error("numerics.truncation_policy", "expected error or warn");
        }
        if (n.contains("truncation_tolerance"))
            cfg.numerics.truncation_tolerance = n["truncation_tolerance"].get<double>();
    }

    if (root.contains("scan")) {
        const Json& sc = root["scan"];
        detail::require_keys(sc, {"t_min", "t_max", "step", "allow_undersampled"}, "scan");
        ScanBlock b;
        b.t_min = parse_quantity(require(sc, "t_min", "scan"), Dimension::Time, "scan.t_min");
        b.t_max = parse_quantity(require(sc, "t_max", "scan"), Dimension::Time, "scan.t_max");
        b.step = parse_quantity(require(sc, "step", "scan"), Dimension::Time, "scan.step");
        if (sc.contains("allow_undersampled")) b.allow_undersampled = sc["allow_undersampled"].get<bool>();
        cfg.scan = b;
    }

    if (root.contains("output")) {
        const Json& o = root["output"];
        detail::require_keys(o, {"directory", "precision"}, "output");
        if (o.contains("directory")) cfg.output.directory = o["directory"].get<std::string>();
        if (o.contains("precision")) cfg.output.precision = o["precision"].get<int>();
        if (cfg.output.precision < 1 || cfg.output.precision > 17)
            throw detail::config_error("output.precision", "expected 1..17");
    }

    // Basic physical-range validation happens in the model constructors and
    // detection checks; trigger them early so errors carry config context.
    if (cfg.detection.eta_c < 0 || cfg.detection.eta_c > 1 || cfg.detection.eta_f < 0 ||
        cfg.detection.eta_f > 1)
        throw detail::config_error("detection", "efficiencies must lie in [0,1]");
    if (cfg.detection.rep_rate_hz <= 0) throw detail::config_error("detection.rep_rate", "must be > 0");
    return cfg;
}

/// Fully normalized config (all quantities in a.u. / s^-1, defaults
/// materialized). Parsing the dump of this form reproduces it exactly.
inline Json canonical_json(const RunConfig& cfg) {
    Json m;
    m["kind"] = cfg.model.kind;
    if (cfg.model.kind == "tls") m["omega"] = cfg.model.omega;
    if (cfg.model.kind == "exciton_biexciton") {
        m["omega_x"] = cfg.model.omega_x;
        m["delta"] = cfg.model.delta;
    }
    if (cfg.model.kind == "coupled_emitters") {
        m["omega1"] = cfg.model.omega1;
        m["omega2"] = cfg.model.omega2;
        m["g"] = cfg.model.g;
    }
    m["gamma"] = cfg.model.gamma;
    m["mu"] = cfg.model.mu;

    Json root;
    root["model"] = m;
    root["pulses"] = {{"amplitude", cfg.pulses.amplitude},
                      {"duration", cfg.pulses.duration},
                      {"carrier", cfg.pulses.carrier},
                      {"first_center", cfg.pulses.first_center},
                      {"channels", cfg.pulses.channels}};
    Json det = {{"eta_c", cfg.detection.eta_c},
                {"eta_f", cfg.detection.eta_f},
                {"rep_rate", cfg.detection.rep_rate_hz},
                {"fluorescence_integrand", cfg.detection.fluorescence_integrand}};
    if (cfg.detection.gamma_f >= 0) det["gamma_f"] = cfg.detection.gamma_f;
    if (!cfg.detection.coincidence_channels.empty())
        det["coincidence_channels"] = cfg.detection.coincidence_channels;
    root["detection"] = det;
    Json num = {{"dt", cfg.numerics.dt},
                {"t_start", cfg.numerics.t_start},
                {"t1_stride", cfg.numerics.t1_stride},
                {"frame", cfg.numerics.frame},
                {"truncation_policy", cfg.numerics.truncation_policy},
                {"truncation_tolerance", cfg.numerics.truncation_tolerance}};
    if (cfg.numerics.pad >= 0) num["pad"] = cfg.numerics.pad;
    root["numerics"] = num;
    if (cfg.scan)
        root["scan"] = {{"t_min", cfg.scan->t_min},
                        {"t_max", cfg.scan->t_max},
                        {"step", cfg.scan->step},
                        {"allow_undersampled", cfg.scan->allow_undersampled}};
    root["output"] = {{"directory", cfg.output.directory}, {"precision", cfg.output.precision}};
    return root;
}

/// Canonical form without the output block: the part of a config that
/// determines the computed numbers (data provenance, not file placement).
inline Json data_json(const RunConfig& cfg) {
    Json j = canonical_json(cfg);
    j.erase("output");
    return j;
}

/// FNV-1a-64 over the data-determining canonical form; stable provenance tag
/// for output headers. Configs that differ only in output placement produce
/// identical data and share a hash.
inline std::string config_hash(const RunConfig& cfg) {
    const std::string dump = data_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline QuantumSystem build_system(const RunConfig& cfg) {
    QuantumSystem s;
    if (cfg.model.kind == "tls") {
        s = make_two_level(cfg.model.omega, cfg.model.gamma, cfg.model.mu);
    } else if (cfg.model.kind == "exciton_biexciton") {
        s = make_exciton_biexciton(
            {cfg.model.omega_x, cfg.model.delta, cfg.model.gamma, cfg.model.mu});
    } else {
        s = make_coupled_emitters({cfg.model.omega1, cfg.model.omega2, cfg.model.g,
                                   cfg.model.gamma, cfg.model.mu});
    }
    if (!cfg.detection.coincidence_channels.empty()) {
        Matrix a = Matrix::Zero(s.dim, s.dim);
        for (const auto& label : cfg.detection.coincidence_channels)
            a += s.jumps.at(s.jump_index(label)).op;
        s.emission_op = a;
    }
    return s;
}

inline DetectionParams build_detection(const RunConfig& cfg) {
    DetectionParams det;
    det.eta_c = cfg.detection.eta_c;
    det.eta_f = cfg.detection.eta_f;
    det.rep_rate_hz = cfg.detection.rep_rate_hz;
    det.gamma_f = cfg.detection.gamma_f >= 0 ? cfg.detection.gamma_f : cfg.model.gamma;
    check_detection(det);
    return det;
}

// Owns the system plus the per-delay evaluation recipe derived from a config.
struct RunContext {
    QuantumSystem system;
    DelayScanSetup setup;

    RunContext(const RunContext&) = delete;
    RunContext& operator=(const RunContext&) = delete;
    RunContext(RunContext&&) = delete;

    explicit RunContext(const RunConfig& cfg) {
        system = build_system(cfg);
        setup.system = &system;
        setup.pulse = Pulse{cfg.pulses.amplitude, 0.0, cfg.pulses.duration, cfg.pulses.carrier};
        for (const auto& label : cfg.pulses.channels)
            setup.channels.push_back(system.drive_index(label));
        setup.first_center = cfg.pulses.first_center;
        setup.t_start = cfg.numerics.t_start;
        setup.dt = cfg.numerics.dt;
        setup.pad = cfg.numerics.pad >= 0 ? cfg.numerics.pad : 12.0 / cfg.model.gamma;
        setup.frame = cfg.numerics.frame == "lab" ? Frame::Lab : Frame::Rotating;
        setup.g2.t1_stride = cfg.numerics.t1_stride;
        setup.det = build_detection(cfg);
        setup.integrand = cfg.detection.fluorescence_integrand == "channel_sum"
                              ? FluorescenceIntegrand::ChannelSum
                              : FluorescenceIntegrand::EmissionOp;
        setup.trunc.strict = cfg.numerics.truncation_policy == "error";
        setup.trunc.tolerance = cfg.numerics.truncation_tolerance;
    }
};

inline ScanRange scan_range(const RunConfig& cfg) {
    if (!cfg.scan) throw std::runtime_error("config has no scan block");
    return {cfg.scan->t_min, cfg.scan->t_max, cfg.scan->step, cfg.scan->allow_undersampled};
}

}  // namespace cpcs
