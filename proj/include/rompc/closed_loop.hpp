#pragma once

#include "rompc/controller.hpp"
#include "rompc/tube_verify.hpp"

#include <iomanip>
#include <numeric>
#include <sstream>

namespace rompc {

struct ClosedLoopOptions {
    double t_final = 10.0;
    int sim_substeps = 10;             // dt_sim = dt / sim_substeps
    double disturbance_magnitude = 0.0;
    std::uint64_t seed = 1;
    Vector x0;                         // empty: start at rest
    int inject_fault_at = -1;          // control step index, -1 disables
    bool check_tube_validity = true;   // compare measured errors to the tubes
};

/// Time-indexed record of a closed-loop run at the simulation rate, plus
/// per-control-step solver statistics.
struct ClosedLoopTrace {
    Scheme scheme = Scheme::RnRompc;
    double dt = 0.02;
    double dt_sim = 0.002;
    std::vector<double> t;
    Matrix u;        // m x samples (applied input, held per period)
    Matrix zr;       // n x samples (nominal prediction under the applied input)
    Matrix xr;       // n x samples (measured reduced state)
    Vector s, delta; // tube radii at each sample
    Matrix con;      // n_h x samples: G_j C x - g_j
    Matrix y, y_ref; // outputs and raw reference
    std::vector<OcpStatus> step_status;
    std::vector<int> step_scp_iters;
    std::vector<double> step_solve_seconds;
    int fallback_count = 0;
    bool diverged = false;
    int tube_checks = 0;
    int tube_failures = 0;

    int samples() const { return static_cast<int>(t.size()); }

    int violation_samples() const {
        int count = 0;
        for (int k = 0; k < samples(); ++k) {
            if (con.col(k).maxCoeff() > 0.0) ++count;
        }
        return count;
    }

    double max_violation() const {
        double worst = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < samples(); ++k) worst = std::max(worst, con.col(k).maxCoeff());
        return worst;
    }

    double mean_tracking_error() const {
        double acc = 0.0;
        for (int k = 0; k < samples(); ++k) acc += (y.col(k) - y_ref.col(k)).norm();
        return samples() ? acc / samples() : 0.0;
    }

    double max_tracking_error() const {
        double worst = 0.0;
        for (int k = 0; k < samples(); ++k) {
            worst = std::max(worst, (y.col(k) - y_ref.col(k)).norm());
        }
        return worst;
    }

    bool all_steps_optimal() const {
        for (auto s_ : step_status) {
            if (s_ != OcpStatus::Optimal) return false;
        }
        return !step_status.empty();
    }

    std::string to_csv() const {
        std::ostringstream oss;
        oss << "t,scheme,status";
        for (int i = 0; i < u.rows(); ++i) oss << ",u_" << i + 1;
        for (int i = 0; i < zr.rows(); ++i) oss << ",zr_" << i + 1;
        for (int i = 0; i < xr.rows(); ++i) oss << ",xr_" << i + 1;
        oss << ",s,delta";
        for (int j = 0; j < con.rows(); ++j) oss << ",con_" << j + 1;
        oss << "\n";
        oss << std::setprecision(17);
        const int per = static_cast<int>(std::round(dt / dt_sim));
        for (int k = 0; k < samples(); ++k) {
            const int step = std::min(k / per, static_cast<int>(step_status.size()) - 1);
            oss << t[k] << "," << scheme_name(scheme) << ","
                << ocp_status_name(step_status[step]);
            for (int i = 0; i < u.rows(); ++i) oss << "," << u(i, k);
            for (int i = 0; i < zr.rows(); ++i) oss << "," << zr(i, k);
            for (int i = 0; i < xr.rows(); ++i) oss << "," << xr(i, k);
            oss << "," << s[k] << "," << delta[k];
            for (int j = 0; j < con.rows(); ++j) oss << "," << con(j, k);
            oss << "\n";
        }
        return oss.str();
    }
};

/// Alternates mpc_step and plant simulation over each sampling period with
/// piecewise-constant actuation noise. Baseline schemes run through the same
/// loop with their own subproblem shape. Divergence aborts with the partial
/// trace flagged.
inline ClosedLoopTrace run_closed_loop(const FullOrderModel& model, const SsmRom& rom,
                                       const TubeParams& params,
                                       const PolytopicConstraints& cons, const OcpConfig& cfg,
                                       const ReferenceSchedule& schedule,
                                       const ClosedLoopOptions& opt) {
    const int steps = static_cast<int>(std::round(opt.t_final / cfg.dt));
    const double dt_sim = cfg.dt / opt.sim_substeps;
    const int n_samples = steps * opt.sim_substeps + 1;

    ClosedLoopTrace trace;
    trace.scheme = cfg.scheme;
    trace.dt = cfg.dt;
    trace.dt_sim = dt_sim;
    trace.t.reserve(n_samples);
    trace.u.resize(model.m, n_samples);
    trace.zr.resize(rom.n, n_samples);
    trace.xr.resize(rom.n, n_samples);
    trace.s.resize(n_samples);
    trace.delta.resize(n_samples);
    trace.con.resize(cons.rows(), n_samples);
    trace.y.resize(model.n_y, n_samples);
    trace.y_ref.resize(model.n_y, n_samples);

    const DiscreteMaps maps = discretize(rom, params, cfg);
    ControllerState ctl;
    Vector x = opt.x0.size() ? opt.x0 : Vector::Zero(model.n_f);

    PiecewiseConstantSignal d_signal =
        opt.disturbance_magnitude > 0.0
            ? sample_disturbance(model, opt.disturbance_magnitude, cfg.dt, opt.t_final,
                                 opt.seed)
            : PiecewiseConstantSignal::zero(cfg.dt, model.n_f, std::max(1, steps));

    int at = 0;
    auto record = [&](double time, const Vector& xs, const Vector& u_now, const Vector& z_nom,
                      const TubeState& tube) {
        trace.t.push_back(time);
        trace.u.col(at) = u_now;
        trace.zr.col(at) = z_nom;
        trace.xr.col(at) = xs.head(rom.n);
        trace.s[at] = tube.s;
        trace.delta[at] = tube.delta;
        const Vector y_now = model.C * xs;
        trace.y.col(at) = y_now;
        trace.y_ref.col(at) = schedule.at(time).y_ref;
        trace.con.col(at) = cons.G * y_now - cons.g;
        ++at;
    };

    for (int k = 0; k < steps; ++k) {
        const double t_now = k * cfg.dt;
        const Vector x_r = project(rom, x);
        StepResult step;
        try {
            step = mpc_step(ctl, x_r, t_now, cfg, maps, rom, params, cons, schedule,
                            k == opt.inject_fault_at);
        } catch (const std::runtime_error&) {
            trace.diverged = true;
            break;
        }
        trace.step_status.push_back(step.sol.status);
        trace.step_scp_iters.push_back(step.sol.scp_iters);
        trace.step_solve_seconds.push_back(step.sol.solve_seconds);

        // Simulate the plant over one period with the applied input.
        const auto u_hold = PiecewiseConstantSignal::constant(cfg.dt, step.applied, 1);
        const auto d_hold = PiecewiseConstantSignal::constant(cfg.dt, d_signal.at(t_now), 1);
        Trajectory seg;
        try {
            seg = simulate(model, x, u_hold, d_hold, cfg.dt, dt_sim);
        } catch (const std::runtime_error&) {
            trace.diverged = true;
            break;
        }

        // Nominal rollout and exact tube values on the sample grid.
        const Vector z0 = step.sol.z_traj.col(0);
        const double delta0 = (x_r - z0).norm();
        const double s0_here =
            cfg.scheme == Scheme::RnRompc ? step.sol.s_traj[0] : 0.0;
        const InputNorms nu = input_norms(rom, step.applied);
        Vector z_nom = z0;
        TubeState tube{s0_here, cfg.scheme == Scheme::RnRompc ? delta0 : 0.0};
        for (int i = 0; i < opt.sim_substeps; ++i) {
            record(t_now + i * dt_sim, seg.state(i), step.applied, z_nom, tube);
            z_nom = detail::rk4_step(
                [&](double, const Vector& zs) { return reduced_rhs(rom, zs, step.applied); },
                0.0, z_nom, dt_sim);
            if (cfg.scheme == Scheme::RnRompc) {
                tube = propagate_interval(params, tube, nu, dt_sim);
            }
        }

        x = seg.state(seg.samples() - 1);

        // Tube validity against the measured state at the next instant.
        if (opt.check_tube_validity && cfg.scheme == Scheme::RnRompc) {
            ++trace.tube_checks;
            const double err_n = off_manifold_error(rom, x);
            const double err_r = (x.head(rom.n) - step.sol.z_traj.col(1)).norm();
            if (err_n > step.sol.s_traj[1] + 1e-12 ||
                err_r > step.sol.delta_traj[1] + 1e-12) {
                ++trace.tube_failures;
            }
        }

        if (k == steps - 1) {
            const Vector z_end = step.sol.z_traj.col(1);
            TubeState tube_end{cfg.scheme == Scheme::RnRompc ? step.sol.s_traj[1] : 0.0,
                               cfg.scheme == Scheme::RnRompc ? step.sol.delta_traj[1] : 0.0};
            record(opt.t_final, x, step.applied, z_end, tube_end);
        }
    }
    trace.fallback_count = ctl.fallback_count;

    const int got = at;
    trace.u.conservativeResize(Eigen::NoChange, got);
    trace.zr.conservativeResize(Eigen::NoChange, got);
    trace.xr.conservativeResize(Eigen::NoChange, got);
    trace.s.conservativeResize(got);
    trace.delta.conservativeResize(got);
    trace.con.conservativeResize(Eigen::NoChange, got);
    trace.y.conservativeResize(Eigen::NoChange, got);
    trace.y_ref.conservativeResize(Eigen::NoChange, got);
    return trace;
}

}  // namespace rompc
