#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "cpcs/cpcs.hpp"

namespace fs = std::filesystem;
using namespace cpcs;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int effective_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

int output_precision(const RunConfig& cfg) {
    if (const char* env = std::getenv("CPCS_OUTPUT_PRECISION")) {
        const int p = std::atoi(env);
        if (p >= 1 && p <= 17) return p;
        std::cerr << "warning: ignoring CPCS_OUTPUT_PRECISION=" << env << "\n";
    }
    return cfg.output.precision;
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int threads = 0;
    std::string dt_text;
    bool strict = false;
    bool warn = false;
    bool summary = false;
};

RunConfig load_config(const CommonArgs& args) {
    RunConfig cfg = parse_config(read_file(args.config_path));
    if (!args.dt_text.empty())
        cfg.numerics.dt = detail::quantity_from_string(args.dt_text, Dimension::Time, "--dt");
    if (args.strict) cfg.numerics.truncation_policy = "error";
    if (args.warn) cfg.numerics.truncation_policy = "warn";
    if (!args.out_dir.empty()) cfg.output.directory = args.out_dir;
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config = true) {
    auto* c = cmd->add_option("--config", args.config_path, "run configuration (JSON)");
    if (needs_config) c->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--threads", args.threads, "worker threads (0: hardware)");
    cmd->add_option("--dt", args.dt_text, "propagation step override, e.g. '0.25 au'");
    auto* s = cmd->add_flag("--strict", args.strict, "error on truncation-residual violations");
    cmd->add_flag("--warn", args.warn, "only warn on truncation-residual violations")->excludes(s);
    cmd->add_flag("--summary", args.summary, "write run summary JSON");
}

std::vector<std::string> header_for(const RunConfig& cfg) {
    return csv_header(config_hash(cfg), data_json(cfg).dump());
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir);
}

void write_summary(const std::string& path, const Json& j) {
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

double parse_delay(const std::string& text) {
    return detail::quantity_from_string(text, Dimension::Time, "--delay");
}

int run_g2map(const CommonArgs& args, const std::string& delay_text, int t2_stride) {
    RunConfig cfg = load_config(args);
    RunContext ctx(cfg);
    const double delay = parse_delay(delay_text);
    const auto t0 = std::chrono::steady_clock::now();

    DriveProgram prog = make_program(ctx.setup, delay);
    TimeGrid grid = make_grid(ctx.setup, delay);
    DensityTrajectory traj = propagate(ctx.system, prog, DensityMatrix::ground(ctx.system.dim), grid);
    const double residual = truncation_residual(traj);
    check_truncation(residual, ctx.setup.trunc);

    G2Options opt = ctx.setup.g2;
    opt.threads = effective_threads(args.threads);
    CorrelationMap map = g2_grid(ctx.system, prog, grid, opt, &traj);
    map.delay = delay;
    CorrelationMap pmap = coincidence_probability_map(map, ctx.setup.det.gamma_f, grid.dt);

    ensure_dir(cfg.output.directory);
    const int prec = output_precision(cfg);
    const auto header = header_for(cfg);
    write_map_csv(cfg.output.directory + "/g2_map.csv", map, header, prec, t2_stride);
    write_map_csv(cfg.output.directory + "/p_map.csv", pmap, header, prec, t2_stride);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (args.summary) {
        Json j = {{"config_hash", config_hash(cfg)},
                  {"delay_au", delay},
                  {"seconds", secs},
                  {"truncation_residual", residual},
                  {"max_trace_drift", traj.diag.max_trace_drift},
                  {"max_herm_defect", traj.diag.max_herm_defect},
                  {"min_eigenvalue", traj.diag.min_eigenvalue},
                  {"g2_max_imag_residue", map.max_imag_residue},
                  {"g2_min_value", map.min_value},
                  {"rows", map.n_rows()}};
        write_summary(cfg.output.directory + "/g2map_summary.json", j);
    }
    std::cout << "wrote " << cfg.output.directory << "/g2_map.csv and p_map.csv ("
              << map.n_rows() << " rows, " << secs << " s)\n";
    return 0;
}

int run_scan(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    RunContext ctx(cfg);
    ScanRange range = scan_range(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    ScanResult scan = run_delay_scan(ctx.setup, range, effective_threads(args.threads));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    ensure_dir(cfg.output.directory);
    write_scan_csv(cfg.output.directory + "/scan.csv", scan, header_for(cfg), output_precision(cfg));
    if (args.summary) {
        Json j = {{"config_hash", config_hash(cfg)},
                  {"points", scan.delay.size()},
                  {"seconds", secs},
                  {"max_truncation_residual",
                   *std::max_element(scan.residual.begin(), scan.residual.end())},
                  {"max_trace_drift", scan.max_trace_drift},
                  {"max_herm_defect", scan.max_herm_defect},
                  {"min_eigenvalue", scan.min_eigenvalue},
                  {"g2_max_imag_residue", scan.g2_max_imag},
                  {"g2_max_diagonal", scan.g2_max_diagonal}};
        write_summary(cfg.output.directory + "/scan_summary.json", j);
    }
    std::cout << "wrote " << cfg.output.directory << "/scan.csv (" << scan.delay.size()
              << " points, " << secs << " s)\n";
    return 0;
}

int run_spectrum(const std::string& in_path, const std::string& out_path,
                 const std::string& channel, const std::string& window, bool keep_mean,
                 int precision) {
    ScanCsv data = read_scan_csv(in_path);
    const double step_au = units::fs_to_au(uniform_step(data.t_fs));
    const auto& series = channel == "f" ? data.f_hz : data.c_hz;
    Window w = window == "hann" ? Window::Hann : Window::None;
    Spectrum spec = spectrum(series, step_au, w, !keep_mean);

    std::vector<std::string> header = data.comments;  // carry the scan provenance along
    header.push_back("# spectrum channel=" + channel + " window=" + window +
                     " subtract_mean=" + (keep_mean ? std::string("false") : std::string("true")));
    write_spectrum_csv(out_path, spec, header, precision);
    std::cout << "wrote " << out_path << " (" << spec.omega.size() << " bins)\n";
    return 0;
}

int run_convert(const std::string& value_text, const std::string& to_unit,
                const std::string& dimension) {
    static const std::map<std::string, Dimension> dims = {
        {"energy", Dimension::Energy},   {"time", Dimension::Time},
        {"field", Dimension::Field},     {"dipole", Dimension::Dipole},
        {"rate", Dimension::RateAu},     {"frequency", Dimension::FrequencySI}};
    auto infer = [&](const std::string& unit) -> std::optional<Dimension> {
        if (unit == "eV" || unit == "meV") return Dimension::Energy;
        if (unit == "fs" || unit == "ps") return Dimension::Time;
        if (unit == "V_per_m" || unit == "V/m") return Dimension::Field;
        if (unit == "D" || unit == "Debye") return Dimension::Dipole;
        if (unit == "Hz" || unit == "s^-1" || unit == "kHz" || unit == "MHz" || unit == "GHz" ||
            unit == "THz")
            return Dimension::FrequencySI;
        return std::nullopt;
    };

    Dimension dim;
    if (!dimension.empty()) {
        auto it = dims.find(dimension);
        if (it == dims.end()) throw std::runtime_error("unknown dimension " + dimension);
        dim = it->second;
    } else if (auto d = infer(to_unit)) {
        dim = *d;
    } else {
        // target is a.u.; infer from the source unit
        const char* begin = value_text.c_str();
        char* end = nullptr;
        std::strtod(begin, &end);
        std::string src_unit(end ? end : "");
        while (!src_unit.empty() && std::isspace(static_cast<unsigned char>(src_unit.front())))
            src_unit.erase(0, 1);
        auto src_dim = infer(src_unit);
        if (!src_dim) throw std::runtime_error("cannot infer dimension; pass --dimension");
        dim = *src_dim;
    }

    // Energy-like target units convert through a.u.; FrequencySI stays SI.
    const double internal = detail::quantity_from_string(value_text, dim, "--value");
    double out = internal;
    if (to_unit == "au" || to_unit == "a.u.") {
        if (dim == Dimension::FrequencySI) out = units::hz_to_au(internal);
    } else if (to_unit == "eV") out = units::au_to_ev(internal);
    else if (to_unit == "meV") out = units::au_to_ev(internal) * 1e3;
    else if (to_unit == "fs") out = units::au_to_fs(internal);
    else if (to_unit == "ps") out = units::au_to_fs(internal) * 1e-3;
    else if (to_unit == "V_per_m" || to_unit == "V/m") out = units::au_to_vpm(internal);
    else if (to_unit == "D" || to_unit == "Debye") out = units::au_to_debye(internal);
    else if (to_unit == "Hz" || to_unit == "s^-1")
        out = dim == Dimension::FrequencySI ? internal : units::au_to_hz(internal);
    else if (to_unit == "MHz") out = (dim == Dimension::FrequencySI ? internal : units::au_to_hz(internal)) * 1e-6;
    else if (to_unit == "THz") out = (dim == Dimension::FrequencySI ? internal : units::au_to_hz(internal)) * 1e-12;
    else throw std::runtime_error("unknown target unit " + to_unit);

    std::cout << format_sig(out, 12) << " " << to_unit << "\n";
    return 0;
}

int run_validate(const CommonArgs& args, const std::string& delay_text, int n_traj,
                 std::uint64_t seed, const std::string& clicks_path) {
    RunConfig cfg = load_config(args);
    RunContext ctx(cfg);
    const double delay = parse_delay(delay_text);
    const QuantumSystem& sys = ctx.system;
    const int threads = effective_threads(args.threads);

    DriveProgram prog = make_program(ctx.setup, delay);
    TimeGrid grid = make_grid(ctx.setup, delay);

    bool all_ok = true;
    auto report = [&](const std::string& name, bool ok, double value) {
        std::cout << (ok ? "ok   " : "FAIL ") << name << " = " << format_sig(value, 6) << "\n";
        all_ok = all_ok && ok;
    };

    DensityTrajectory traj = propagate(sys, prog, DensityMatrix::ground(sys.dim), grid);
    report("trace_drift", traj.diag.max_trace_drift < 1e-8, traj.diag.max_trace_drift);
    report("hermiticity_defect", traj.diag.max_herm_defect < 1e-10, traj.diag.max_herm_defect);
    report("min_eigenvalue", traj.diag.min_eigenvalue > -1e-8, traj.diag.min_eigenvalue);
    report("truncation_residual", truncation_residual(traj) < ctx.setup.trunc.tolerance,
           truncation_residual(traj));

    {  // integrator refinement: the dt/2 rerun must reproduce the trajectory
        TimeGrid fine{grid.t_start, 0.5 * grid.dt, 2 * grid.n_steps};
        auto tf = propagate(sys, prog, DensityMatrix::ground(sys.dim), fine);
        double worst = 0;
        for (int k = 0; k <= grid.n_steps; k += std::max(1, grid.n_steps / 128))
            worst = std::max(worst,
                             (traj.state(k) - tf.state(2 * k)).cwiseAbs().maxCoeff());
        report("dt_refinement_delta", worst < 1e-4, worst);
    }

    {  // propagator linearity on a mixed pair of initial states
        DensityMatrix mixed{Matrix::Identity(sys.dim, sys.dim) / double(sys.dim), true};
        auto t1 = propagate(sys, prog, DensityMatrix::ground(sys.dim), grid);
        auto t2 = propagate(sys, prog, mixed, grid);
        Matrix combo = 0.3 * DensityMatrix::ground(sys.dim).mat + 0.7 * mixed.mat;
        auto t3 = propagate(sys, prog, {combo, true}, grid);
        const int last = grid.n_steps;
        const double defect =
            (t3.state(last) - 0.3 * t1.state(last) - 0.7 * t2.state(last)).cwiseAbs().maxCoeff();
        report("propagator_linearity", defect < 1e-10, defect);
    }

    G2Options opt = ctx.setup.g2;
    opt.threads = threads;
    PointResult pt = coincidence_point(sys, prog, grid, opt, ctx.setup.det, ctx.setup.integrand,
                                       ctx.setup.trunc);
    report("g2_imag_residue", pt.g2_max_imag < 1e-10, pt.g2_max_imag);
    report("g2_min_value", pt.g2_min_value > -1e-10, pt.g2_min_value);
    if (sys.dim == 2) report("antibunching_diagonal", pt.g2_max_diagonal < 1e-10, pt.g2_max_diagonal);

    {  // conditional trace equals the emission likelihood of the source state
        const Matrix ada = sys.emission_op.adjoint() * sys.emission_op;
        double worst = 0;
        for (int k = 0; k <= grid.n_steps; k += std::max(1, grid.n_steps / 64)) {
            const Matrix& rho = traj.state(k);
            const double tr_cond = apply_emission_jump(sys.emission_op, rho).mat.trace().real();
            const double expect = (ada * rho).trace().real();
            worst = std::max(worst, std::abs(tr_cond - expect));
        }
        report("conditional_trace_consistency", worst < 1e-12, worst);
    }

    {  // detector-efficiency prefactor scaling is exact
        DetectionParams det = ctx.setup.det;
        DetectionParams det2 = det;
        det2.eta_c = 2.0 * det.eta_c;
        det2.eta_f = 2.0 * det.eta_f;
        if (det2.eta_c <= 1.0 && det2.eta_f <= 1.0) {
            PointResult pt2 = coincidence_point(sys, prog, grid, opt, det2, ctx.setup.integrand,
                                                ctx.setup.trunc);
            const bool ok = pt2.c_rate == 4.0 * pt.c_rate && pt2.f_rate == 2.0 * pt.f_rate;
            report("detector_scaling_exact", ok, ok ? 0.0 : 1.0);
        }
    }

    {  // Monte-Carlo cross-check of the per-cycle ordered-pair count
        McOptions mco;
        mco.n_traj = n_traj;
        mco.seed = seed;
        mco.threads = threads;
        mco.record_clicks = !clicks_path.empty();
        CVector ground = CVector::Zero(sys.dim);
        ground(0) = 1.0;
        McResult mc = mc_coincidence(sys, prog, grid, ground, mco);
        if (!clicks_path.empty()) {
            write_clicks_csv(clicks_path, mc.clicks, header_for(cfg), output_precision(cfg));
            std::cout << "     wrote " << clicks_path << "\n";
        }
        const double pairs_reg =
            pt.c_rate / (ctx.setup.det.eta_c * ctx.setup.det.eta_c * ctx.setup.det.rep_rate_hz);
        const double z = mc.se_pairs > 0 ? std::abs(mc.mean_pairs - pairs_reg) / mc.se_pairs : 0.0;
        std::cout << "     mc_pairs=" << format_sig(mc.mean_pairs, 6)
                  << " +- " << format_sig(mc.se_pairs, 3)
                  << "  regression_pairs=" << format_sig(pairs_reg, 6) << "\n";
        report("mc_step_jump_probability", mc.max_step_jump_probability < 0.01,
               mc.max_step_jump_probability);
        report("mc_regression_z_score", z <= 3.0, z);
    }

    std::cout << (all_ok ? "validate: all checks passed\n" : "validate: FAILURES present\n");
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coincidence spectroscopy simulator for pulsed few-level emitters"};
    app.require_subcommand(1);

    CommonArgs g2_args, scan_args, val_args;
    std::string g2_delay = "72 fs", val_delay = "72 fs";
    int t2_stride = 1;
    auto* g2 = app.add_subcommand("g2map", "two-time coincidence-probability map at one delay");
    add_common(g2, g2_args);
    g2->add_option("--delay", g2_delay, "inter-pulse delay, e.g. '72 fs'");
    g2->add_option("--t2-stride", t2_stride, "decimate t2 columns in the CSV export");

    auto* sc = app.add_subcommand("scan", "delay scan producing c(T) and f(T)");
    add_common(sc, scan_args);

    std::string spec_in, spec_out = "spectrum.csv", spec_channel = "c", spec_window = "none";
    bool keep_mean = false;
    int spec_precision = 9;
    auto* sp = app.add_subcommand("spectrum", "DFT magnitudes of a scan CSV");
    sp->add_option("--in", spec_in, "scan CSV input")->required();
    sp->add_option("--out", spec_out, "output CSV path");
    sp->add_option("--channel", spec_channel, "c or f")->check(CLI::IsMember({"c", "f"}));
    sp->add_option("--window", spec_window, "none or hann")->check(CLI::IsMember({"none", "hann"}));
    sp->add_flag("--keep-mean", keep_mean, "skip mean subtraction");
    sp->add_option("--precision", spec_precision, "significant digits");

    auto* va = app.add_subcommand("validate", "invariant suite and Monte-Carlo cross-check");
    add_common(va, val_args);
    va->add_option("--delay", val_delay, "delay used for the checks");
    int n_traj = 4000;
    std::uint64_t seed = 1;
    std::string clicks_path;
    va->add_option("--ntraj", n_traj, "Monte-Carlo trajectories");
    va->add_option("--seed", seed, "Monte-Carlo master seed");
    va->add_option("--dump-clicks", clicks_path, "write the click records to this CSV");

    std::string cv_value, cv_to, cv_dim;
    auto* cv = app.add_subcommand("convert-units", "convert between a.u. and lab units");
    cv->add_option("--value", cv_value, "quantity, e.g. '2 eV' or '7.2e8 V_per_m'")->required();
    cv->add_option("--to", cv_to, "target unit")->required();
    cv->add_option("--dimension", cv_dim, "energy|time|field|dipole|rate|frequency");

    CLI11_PARSE(app, argc, argv);

    try {
        if (g2->parsed()) return run_g2map(g2_args, g2_delay, t2_stride);
        if (sc->parsed()) return run_scan(scan_args);
        if (sp->parsed())
            return run_spectrum(spec_in, spec_out, spec_channel, spec_window, keep_mean,
                                spec_precision);
        if (va->parsed()) return run_validate(val_args, val_delay, n_traj, seed, clicks_path);
        if (cv->parsed()) return run_convert(cv_value, cv_to, cv_dim);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
