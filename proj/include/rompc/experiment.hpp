#pragma once

#include "rompc/benchmark.hpp"
#include "rompc/closed_loop.hpp"
#include "rompc/io.hpp"
#include "rompc/ssm_fit.hpp"
#include "rompc/tube_fit.hpp"

#include <filesystem>
#include <map>

namespace rompc {

struct ExperimentResult;
inline void emit_report(const ExperimentResult& result, const std::string& out_dir);

/// Output-space square path traced at constant speed: bottom-right ->
/// top-right (the touching edge) -> top-left -> bottom-left and around.
struct SquarePath {
    Vector center;       // n_y = 2
    double half_width = 0.3;
    double half_height = 0.22;
    double period = 1.0;

    Vector at(double t) const {
        const double hw = half_width, hh = half_height;
        Vector c0(2), c1(2), c2(2), c3(2);
        c0 << center[0] + hw, center[1] - hh;
        c1 << center[0] + hw, center[1] + hh;
        c2 << center[0] - hw, center[1] + hh;
        c3 << center[0] - hw, center[1] - hh;
        const std::array<Vector, 4> corners = {c0, c1, c2, c3};
        const double lengths[4] = {2 * hh, 2 * hw, 2 * hh, 2 * hw};
        const double perimeter = 2.0 * (lengths[0] + lengths[1]);
        double arc = std::fmod(t, period) / period * perimeter;
        for (int e = 0; e < 4; ++e) {
            if (arc <= lengths[e] + 1e-12) {
                const double f = lengths[e] > 0 ? arc / lengths[e] : 0.0;
                return corners[e] + f * (corners[(e + 1) % 4] - corners[e]);
            }
            arc -= lengths[e];
        }
        return corners[0];
    }
};

struct ReferenceBuildOptions {
    double backoff_shrink = 0.92;
    int max_backoff = 80;
    Vector backoff_anchor;  // output-space anchor; default: low-pretension steady output
    Vector u_center;        // interior input the boxed steady solve is pulled toward
};

/// Terminal pair for one output target under the scheme's rules. For
/// rn-rompc the target is pulled toward the anchor until the tightened
/// terminal checks accept it; soft baselines take the raw steady pair with a
/// degenerate box.
inline ReferenceSegment make_reference_segment(double t_from, const Vector& y_target,
                                               const SsmRom& rom, const TubeParams& params,
                                               const PolytopicConstraints& cons,
                                               const OcpConfig& cfg,
                                               const ReferenceBuildOptions& opt) {
    ReferenceSegment seg;
    seg.t_from = t_from;
    seg.y_ref = y_target;

    TerminalOptions topt;
    topt.u_lo = cfg.u_lo;
    topt.u_hi = cfg.u_hi;
    topt.u_center = opt.u_center;

    if (cfg.scheme != Scheme::RnRompc) {
        auto [z_bar, u_bar] =
            solve_steady_pair_boxed(rom, y_target, cfg.u_lo, cfg.u_hi, opt.u_center);
        seg.terminal = TerminalSet{z_bar, u_bar, 0.0, 0.0};
        seg.z_ref = z_bar;
        seg.u_ref = u_bar;
        return seg;
    }

    Vector anchor = opt.backoff_anchor;
    require(anchor.size() == y_target.size(), "make_reference_segment: anchor missing");
    Vector y_try = y_target;
    for (int attempt = 0; attempt <= opt.max_backoff; ++attempt) {
        try {
            seg.terminal = compute_terminal_set(rom, params, cons,
                                                ReferenceTarget::output(y_try), topt);
            seg.z_ref = seg.terminal.z_bar;
            seg.u_ref = seg.terminal.u_bar;
            return seg;
        } catch (const std::runtime_error&) {
            y_try = anchor + opt.backoff_shrink * (y_try - anchor);
        }
    }
    throw std::runtime_error(
        "make_reference_segment: target unreachable under tightening even after back-off");
}

/// Square-then-setpoint schedule on the control grid: one segment per
/// sampling period while the square is active, then a single setpoint
/// segment. Terminal pairs are recomputed per segment.
namespace detail {
inline void fill_reference_defaults(ReferenceBuildOptions& opt, const SsmRom& rom,
                                    const OcpConfig& cfg) {
    if (opt.u_center.size() == 0) opt.u_center = cfg.u_lo + 0.25 * (cfg.u_hi - cfg.u_lo);
    if (opt.backoff_anchor.size() == 0) {
        const Vector u_anchor = cfg.u_lo + 0.1 * (cfg.u_hi - cfg.u_lo);
        opt.backoff_anchor = rom.C * lift(rom, steady_state_for_input(rom, u_anchor));
    }
}
}  // namespace detail

/// Ramp from the rest-side anchor into the square over ramp_duration, trace
/// the square for square_duration, then hold the setpoint. One segment per
/// sampling period keeps every terminal-pair hop reachable within a horizon.
inline ReferenceSchedule build_square_schedule(const SquarePath& path, double square_duration,
                                               const Vector& setpoint, double t_final,
                                               const SsmRom& rom, const TubeParams& params,
                                               const PolytopicConstraints& cons,
                                               const OcpConfig& cfg,
                                               ReferenceBuildOptions opt = {},
                                               double ramp_duration = 1.0) {
    detail::fill_reference_defaults(opt, rom, cfg);
    ReferenceSchedule schedule;
    const Vector y_start = rom.C * lift(rom, Vector::Zero(rom.n));
    const Vector y_entry = path.at(0.0);
    const int ramp_steps = static_cast<int>(std::round(ramp_duration / cfg.dt));
    for (int k = 0; k < ramp_steps; ++k) {
        const double t = k * cfg.dt;
        const double f = static_cast<double>(k) / std::max(1, ramp_steps);
        const Vector y = y_start + f * (y_entry - y_start);
        schedule.add(make_reference_segment(t, y, rom, params, cons, cfg, opt));
    }
    const int square_steps = static_cast<int>(std::round(square_duration / cfg.dt));
    for (int k = 0; k < square_steps; ++k) {
        const double t = ramp_duration + k * cfg.dt;
        schedule.add(
            make_reference_segment(t, path.at(k * cfg.dt), rom, params, cons, cfg, opt));
    }
    if (ramp_duration + square_duration < t_final + cfg.dt * (cfg.N + 1)) {
        schedule.add(make_reference_segment(ramp_duration + square_duration, setpoint, rom,
                                            params, cons, cfg, opt));
    }
    return schedule;
}

inline ReferenceSchedule build_setpoint_schedule(const Vector& setpoint, const SsmRom& rom,
                                                 const TubeParams& params,
                                                 const PolytopicConstraints& cons,
                                                 const OcpConfig& cfg,
                                                 ReferenceBuildOptions opt = {}) {
    detail::fill_reference_defaults(opt, rom, cfg);
    ReferenceSchedule schedule;
    schedule.add(make_reference_segment(0.0, setpoint, rom, params, cons, cfg, opt));
    return schedule;
}

/// Executable form of the offline design + experiment protocol.
struct ExperimentConfig {
    std::string benchmark_path;  // empty: stock generator below
    BenchmarkGenConfig benchmark;
    std::string rom_source = "exact";          // exact | fitted
    std::string tube_variant = "model-based";  // model-based | data-driven
    Matrix G;
    Vector g;
    Vector buffer;
    int horizon_steps = 3;
    double sampling_period = 0.02;
    double q_weight = 1.0;
    double r_weight = 1e-9;
    double input_min = 0.0;
    double input_max = 2500.0;
    double soft_penalty = 1e4;
    std::vector<std::string> schemes = {"rn-rompc", "nominal-soft", "buffer-soft"};
    double t_final = 10.0;
    std::vector<std::uint64_t> seeds = {1};
    double disturbance_magnitude = -1.0;  // <0: use the benchmark default
    std::string reference = "square";     // square | setpoint
    Vector square_center;
    double square_half_width = 0.10;
    double square_half_height = 0.08;
    double square_period = 1.0;
    double square_duration = 6.0;
    Vector setpoint;
    double d_hat = -1.0;  // data-driven tube offset; <0: d_bar
    int verify_trials = 0;
    int jobs = 1;
    std::string out_dir = "out";

    static ExperimentConfig from_kv(const KeyValueFile& kv);
    KeyValueFile to_kv() const;
};

inline ExperimentConfig ExperimentConfig::from_kv(const KeyValueFile& kv) {
    ExperimentConfig cfg;
    cfg.benchmark_path = kv.get_string("benchmark", "");
    if (cfg.benchmark_path == "default") cfg.benchmark_path.clear();
    if (cfg.benchmark_path.empty()) {
        cfg.benchmark = benchmark_config_from_kv(kv);  // inline overrides allowed
    }
    cfg.rom_source = kv.get_string("rom_source", cfg.rom_source);
    cfg.tube_variant = kv.get_string("tube_variant", cfg.tube_variant);
    const int n_con = static_cast<int>(kv.get_int("constraint_count", 0));
    if (n_con > 0) {
        std::vector<std::vector<double>> rows;
        for (int j = 1; j <= n_con; ++j) {
            rows.push_back(kv.get_doubles("constraint_" + std::to_string(j)));
            require(rows.back().size() >= 2, "constraint rows need G entries plus g");
        }
        const int n_y = static_cast<int>(rows[0].size()) - 1;
        cfg.G.resize(n_con, n_y);
        cfg.g.resize(n_con);
        for (int j = 0; j < n_con; ++j) {
            require(static_cast<int>(rows[j].size()) == n_y + 1,
                    "constraint rows must share the output dimension");
            for (int i = 0; i < n_y; ++i) cfg.G(j, i) = rows[j][i];
            cfg.g[j] = rows[j][n_y];
        }
    }
    if (kv.has("buffer")) {
        const auto b = kv.get_doubles("buffer");
        cfg.buffer = Eigen::Map<const Vector>(b.data(), b.size());
    }
    cfg.horizon_steps = static_cast<int>(kv.get_int("horizon_steps", cfg.horizon_steps));
    cfg.sampling_period = kv.get_double("sampling_period", cfg.sampling_period);
    cfg.q_weight = kv.get_double("q_weight", cfg.q_weight);
    cfg.r_weight = kv.get_double("r_weight", cfg.r_weight);
    cfg.input_min = kv.get_double("input_min", cfg.input_min);
    cfg.input_max = kv.get_double("input_max", cfg.input_max);
    cfg.soft_penalty = kv.get_double("soft_penalty", cfg.soft_penalty);
    if (kv.has("schemes")) cfg.schemes = kv.get_strings("schemes");
    cfg.t_final = kv.get_double("t_final", cfg.t_final);
    if (kv.has("seeds")) {
        cfg.seeds.clear();
        for (double s : kv.get_doubles("seeds")) {
            cfg.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    cfg.disturbance_magnitude =
        kv.get_double("disturbance_magnitude", cfg.disturbance_magnitude);
    cfg.reference = kv.get_string("reference", cfg.reference);
    if (kv.has("square_center")) {
        const auto c = kv.get_doubles("square_center");
        cfg.square_center = Eigen::Map<const Vector>(c.data(), c.size());
    }
    cfg.square_half_width = kv.get_double("square_half_width", cfg.square_half_width);
    cfg.square_half_height = kv.get_double("square_half_height", cfg.square_half_height);
    cfg.square_period = kv.get_double("square_period", cfg.square_period);
    cfg.square_duration = kv.get_double("square_duration", cfg.square_duration);
    if (kv.has("setpoint")) {
        const auto s = kv.get_doubles("setpoint");
        cfg.setpoint = Eigen::Map<const Vector>(s.data(), s.size());
    }
    cfg.d_hat = kv.get_double("d_hat", cfg.d_hat);
    cfg.verify_trials = static_cast<int>(kv.get_int("verify_trials", cfg.verify_trials));
    cfg.jobs = static_cast<int>(kv.get_int("jobs", cfg.jobs));
    cfg.out_dir = kv.get_string("out_dir", cfg.out_dir);
    return cfg;
}

inline KeyValueFile ExperimentConfig::to_kv() const {
    KeyValueFile kv = benchmark_config_to_kv(benchmark);
    kv.set("type", "rompc-experiment-v1");
    if (!benchmark_path.empty()) kv.set("benchmark", benchmark_path);
    kv.set("rom_source", rom_source);
    kv.set("tube_variant", tube_variant);
    kv.set_int("constraint_count", g.size());
    for (int j = 0; j < g.size(); ++j) {
        std::ostringstream oss;
        oss << std::setprecision(17);
        for (int i = 0; i < G.cols(); ++i) oss << G(j, i) << ",";
        oss << g[j];
        kv.set("constraint_" + std::to_string(j + 1), oss.str());
    }
    kv.set_int("horizon_steps", horizon_steps);
    kv.set_double("sampling_period", sampling_period);
    kv.set_double("q_weight", q_weight);
    kv.set_double("r_weight", r_weight);
    kv.set_double("input_min", input_min);
    kv.set_double("input_max", input_max);
    kv.set_double("soft_penalty", soft_penalty);
    {
        std::string joined;
        for (std::size_t i = 0; i < schemes.size(); ++i) {
            joined += (i ? "," : "") + schemes[i];
        }
        kv.set("schemes", joined);
    }
    kv.set_double("t_final", t_final);
    {
        std::ostringstream oss;
        for (std::size_t i = 0; i < seeds.size(); ++i) oss << (i ? "," : "") << seeds[i];
        kv.set("seeds", oss.str());
    }
    kv.set_double("disturbance_magnitude", disturbance_magnitude);
    kv.set("reference", reference);
    return kv;
}

/// Fully wired experiment: plant, rom, tube params, constraints, controller
/// configuration and reference schedules per scheme.
struct ExperimentSetup {
    FullOrderModel model;
    SsmRom rom;
    TubeParams params;
    PolytopicConstraints cons;
    OcpConfig ocp_base;
    double disturbance_magnitude = 0.0;
};

inline ExperimentSetup prepare_experiment(const ExperimentConfig& cfg) {
    ExperimentSetup setup;
    BenchmarkGenConfig gen = cfg.benchmark;
    if (!cfg.benchmark_path.empty()) {
        gen = benchmark_config_from_kv(KeyValueFile::load(cfg.benchmark_path));
    }
    auto spec = make_benchmark_spec(gen);
    auto [model, rom] = manufacture_benchmark(spec);
    setup.model = std::move(model);
    setup.rom = std::move(rom);

    if (cfg.rom_source == "fitted") {
        const auto data = generate_decay_data(setup.model, &setup.rom, 12, 0.6, 4.0, 0.002,
                                              spec.seed + 101);
        SsmRom fitted = fit_graph_rom(data, setup.rom.n, {2, 3}, setup.model);
        setup.rom = std::move(fitted);
    } else {
        require(cfg.rom_source == "exact", "rom_source must be exact or fitted");
        setup.rom.constants = estimate_constants(setup.rom, setup.model, 2000, spec.seed + 7,
                                                 cfg.jobs);
    }

    setup.disturbance_magnitude =
        cfg.disturbance_magnitude >= 0.0 ? cfg.disturbance_magnitude : spec.u_d_magnitude;
    const double d_bar_run =
        setup.model.B.operatorNorm() * setup.disturbance_magnitude;

    if (cfg.G.size() > 0) {
        setup.cons.G = cfg.G;
        setup.cons.g = cfg.g;
    } else {
        // Box fitted to the statically reachable outputs of the stock
        // benchmark: -0.05 <= y_1 <= 0.32, -0.34 <= y_2 <= 0.08.
        setup.cons.G = Matrix(4, setup.model.n_y);
        setup.cons.G << 1, 0, -1, 0, 0, 1, 0, -1;
        setup.cons.g = Vector(4);
        setup.cons.g << 0.32, 0.05, 0.08, 0.34;
    }
    setup.cons.validate();
    require(constraints_meet_manifold(setup.cons, setup.rom, 200, 99),
            "prepare_experiment: constraint set misses the manifold image");

    if (cfg.tube_variant == "model-based") {
        setup.params = TubeParams::model_based(setup.rom.constants, d_bar_run);
    } else {
        require(cfg.tube_variant == "data-driven",
                "tube_variant must be model-based or data-driven");
        // Excitation run, nominal integration and constant fitting.
        const double dt_sim = cfg.sampling_period / 10.0;
        const auto schedule = make_schedule(0.3 * cfg.input_max, 0.8 * cfg.input_max, 400.0,
                                            spec.seed + 23);
        const Vector u_lo = Vector::Constant(setup.model.m, cfg.input_min);
        const Vector u_hi = Vector::Constant(setup.model.m, cfg.input_max);
        const auto u_signal = make_excitation_inputs(schedule, setup.model.m,
                                                     cfg.sampling_period, u_lo, u_hi);
        const double t_exc = schedule.total_duration();
        const auto d_signal =
            sample_disturbance(setup.model, setup.disturbance_magnitude, cfg.sampling_period,
                               t_exc, spec.seed + 31);
        const auto traj = simulate(setup.model, Vector::Zero(setup.model.n_f), u_signal,
                                   d_signal, t_exc, dt_sim);
        Matrix x_r_data(setup.rom.n, traj.samples());
        for (int k = 0; k < traj.samples(); ++k) {
            x_r_data.col(k) = traj.state(k).head(setup.rom.n);
        }
        Matrix u_data(setup.model.m, traj.samples());
        for (int k = 0; k < traj.samples(); ++k) u_data.col(k) = u_signal.at(traj.times[k]);
        const Matrix z_r_data =
            integrate_reduced(setup.rom, Vector::Zero(setup.rom.n), u_signal, t_exc, dt_sim);
        const double d_hat = cfg.d_hat > 0.0 ? cfg.d_hat : std::max(d_bar_run, 1e-6);
        const auto fit = fit_tube_constants(x_r_data, z_r_data, u_data, dt_sim,
                                            std::max(d_bar_run, 1e-9), d_hat, setup.cons,
                                            setup.rom);
        setup.params = fit.to_params(setup.rom.constants.lambda_An,
                                     setup.rom.constants.lambda_Ar);
    }

    OcpConfig& ocp = setup.ocp_base;
    ocp.N = cfg.horizon_steps;
    ocp.dt = cfg.sampling_period;
    ocp.Q = cfg.q_weight * Matrix::Identity(setup.rom.n, setup.rom.n);
    ocp.R = cfg.r_weight * Matrix::Identity(setup.model.m, setup.model.m);
    ocp.u_lo = Vector::Constant(setup.model.m, cfg.input_min);
    ocp.u_hi = Vector::Constant(setup.model.m, cfg.input_max);
    ocp.soft_penalty = cfg.soft_penalty;
    if (cfg.buffer.size() == setup.cons.rows()) ocp.buffer = cfg.buffer;
    return setup;
}

inline ReferenceSchedule build_schedule_for(const ExperimentSetup& setup,
                                            const ExperimentConfig& cfg,
                                            const OcpConfig& ocp) {
    // Default square: right edge on the first constraint bound (touching),
    // vertically centered on the low-pretension anchor.
    Vector center = cfg.square_center;
    if (center.size() == 0) {
        const Vector u_anchor = ocp.u_lo + 0.1 * (ocp.u_hi - ocp.u_lo);
        const Vector y_anchor =
            setup.rom.C * lift(setup.rom, steady_state_for_input(setup.rom, u_anchor));
        center = y_anchor;
        center[0] = setup.cons.g[0] - cfg.square_half_width;
    }
    if (cfg.reference == "square") {
        SquarePath path;
        path.center = center;
        path.half_width = cfg.square_half_width;
        path.half_height = cfg.square_half_height;
        path.period = cfg.square_period;
        Vector setpoint = cfg.setpoint;
        if (setpoint.size() == 0) {
            // Top-left corner region of the constraint box.
            setpoint = center;
            setpoint[0] = center[0] - 1.5 * cfg.square_half_width;
            setpoint[1] = center[1] + 0.5 * cfg.square_half_height;
        }
        return build_square_schedule(path, cfg.square_duration, setpoint, cfg.t_final,
                                     setup.rom, setup.params, setup.cons, ocp);
    }
    require(cfg.reference == "setpoint", "reference must be square or setpoint");
    Vector setpoint = cfg.setpoint.size() ? cfg.setpoint : center;
    return build_setpoint_schedule(setpoint, setup.rom, setup.params, setup.cons, ocp);
}

struct SchemeRun {
    Scheme scheme = Scheme::RnRompc;
    std::uint64_t seed = 0;
    ClosedLoopTrace trace;
};

struct ExperimentResult {
    std::vector<SchemeRun> runs;
    Prop1Report verify_report;
    bool verify_ran = false;
    bool pass = true;
    std::vector<std::string> failures;
};

inline std::string experiment_summary(const ExperimentResult& result);

/// Offline design + online runs for every scheme and seed; writes traces,
/// plot data and the summary into out_dir. Nonzero pass/fail is carried by
/// ExperimentResult::pass (acceptance invariants of the enabled schemes).
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    ExperimentResult result;
    ExperimentSetup setup = prepare_experiment(cfg);

    fs::create_directories(cfg.out_dir);
    fs::create_directories(cfg.out_dir + "/plotdata");

    // Reference schedules depend on the scheme through the terminal rules.
    for (const auto& scheme_name_ : cfg.schemes) {
        OcpConfig ocp = setup.ocp_base;
        ocp.scheme = scheme_from_name(scheme_name_);
        const ReferenceSchedule schedule = build_schedule_for(setup, cfg, ocp);
        for (auto seed : cfg.seeds) {
            ClosedLoopOptions opt;
            opt.t_final = cfg.t_final;
            opt.disturbance_magnitude = setup.disturbance_magnitude;
            opt.seed = seed;
            SchemeRun run;
            run.scheme = ocp.scheme;
            run.seed = seed;
            run.trace = run_closed_loop(setup.model, setup.rom, setup.params, setup.cons,
                                        ocp, schedule, opt);
            std::ostringstream name;
            name << cfg.out_dir << "/trace_" << scheme_name_ << "_seed" << seed << ".csv";
            std::ofstream out(name.str());
            if (!out) throw std::runtime_error("cannot write " + name.str());
            out << run.trace.to_csv();
            result.runs.push_back(std::move(run));
        }
    }

    if (cfg.verify_trials > 0) {
        VerifyOptions vopt;
        vopt.s0 = 0.01;
        vopt.delta0 = 0.01;
        vopt.x_r_radius = 0.25;
        vopt.u_lo = setup.ocp_base.u_lo;
        vopt.u_hi = 0.25 * setup.ocp_base.u_hi;
        vopt.d_magnitude = setup.disturbance_magnitude;
        vopt.jobs = cfg.jobs;
        result.verify_report = verify_prop1(setup.model, setup.rom, setup.params,
                                            cfg.verify_trials, 2.0, cfg.seeds.front(), vopt);
        result.verify_ran = true;
        write_report_csv(result.verify_report, cfg.out_dir + "/tube_verification.csv");
    }

    // Acceptance invariants of the enabled pieces.
    for (const auto& run : result.runs) {
        if (run.trace.diverged) {
            result.pass = false;
            result.failures.push_back("plant divergence in " + scheme_name(run.scheme));
        }
        if (run.scheme == Scheme::RnRompc) {
            if (run.trace.violation_samples() != 0) {
                result.pass = false;
                result.failures.push_back("constraint violation under rn-rompc (seed " +
                                          std::to_string(run.seed) + ")");
            }
            if (!run.trace.all_steps_optimal() || run.trace.fallback_count != 0) {
                result.pass = false;
                result.failures.push_back("loss of recursive feasibility (seed " +
                                          std::to_string(run.seed) + ")");
            }
            if (run.trace.tube_failures != 0) {
                result.pass = false;
                result.failures.push_back("tube validity failure (seed " +
                                          std::to_string(run.seed) + ")");
            }
        }
    }
    if (result.verify_ran && !result.verify_report.pass()) {
        result.pass = false;
        result.failures.push_back("tube verification reported violations");
    }

    emit_report(result, cfg.out_dir);
    return result;
}

inline std::string experiment_summary(const ExperimentResult& result) {
    std::ostringstream oss;
    oss << std::setprecision(6);
    for (const auto& run : result.runs) {
        oss << "scheme: " << scheme_name(run.scheme) << " seed: " << run.seed << "\n";
        const auto& tr = run.trace;
        oss << "  samples: " << tr.samples() << "\n";
        oss << "  violations: " << tr.violation_samples() << "\n";
        oss << "  max_violation: " << tr.max_violation() << "\n";
        oss << "  mean_tracking_error: " << tr.mean_tracking_error() << "\n";
        oss << "  max_tracking_error: " << tr.max_tracking_error() << "\n";
        oss << "  fallbacks: " << tr.fallback_count << "\n";
        oss << "  all_steps_optimal: " << (tr.all_steps_optimal() ? "yes" : "no") << "\n";
        oss << "  tube_checks: " << tr.tube_checks
            << " tube_failures: " << tr.tube_failures << "\n";
        if (!tr.step_solve_seconds.empty()) {
            double total = 0.0, worst = 0.0;
            for (double v : tr.step_solve_seconds) {
                total += v;
                worst = std::max(worst, v);
            }
            oss << "  solve_time_mean: " << total / tr.step_solve_seconds.size()
                << " solve_time_max: " << worst << "\n";
            std::map<int, int> hist;
            for (int it : tr.step_scp_iters) ++hist[it];
            oss << "  scp_iterations:";
            for (const auto& [iters, count] : hist) oss << " " << iters << "x" << count;
            oss << "\n";
        }
    }
    if (result.verify_ran) {
        oss << "tube_verification: trials " << result.verify_report.n_trials
            << " violations " << result.verify_report.violations << " max_s_ratio "
            << result.verify_report.max_s_ratio << " max_delta_ratio "
            << result.verify_report.max_delta_ratio << " left_domain "
            << result.verify_report.left_domain << "\n";
    }
    oss << "pass: " << (result.pass ? "yes" : "no") << "\n";
    for (const auto& f : result.failures) oss << "failure: " << f << "\n";
    return oss.str();
}

/// summary.txt plus plot-ready CSVs (time, outputs, reference, bounds and
/// tube radii per run).
inline void emit_report(const ExperimentResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/plotdata");
    {
        std::ofstream out(out_dir + "/summary.txt");
        if (!out) throw std::runtime_error("cannot write summary in " + out_dir);
        out << experiment_summary(result);
    }
    for (const auto& run : result.runs) {
        std::ostringstream name;
        name << out_dir << "/plotdata/" << scheme_name(run.scheme) << "_seed" << run.seed
             << ".csv";
        std::ofstream out(name.str());
        if (!out) throw std::runtime_error("cannot write " + name.str());
        const auto& tr = run.trace;
        out << "t";
        for (int i = 1; i <= tr.y.rows(); ++i) out << ",y_" << i;
        for (int i = 1; i <= tr.y_ref.rows(); ++i) out << ",y_ref_" << i;
        out << ",max_constraint,s,delta\n" << std::setprecision(17);
        for (int k = 0; k < tr.samples(); ++k) {
            out << tr.t[k];
            for (int i = 0; i < tr.y.rows(); ++i) out << "," << tr.y(i, k);
            for (int i = 0; i < tr.y_ref.rows(); ++i) out << "," << tr.y_ref(i, k);
            out << "," << tr.con.col(k).maxCoeff() << "," << tr.s[k] << "," << tr.delta[k];
            out << "\n";
        }
    }
}

}  // namespace rompc
