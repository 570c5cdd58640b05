#pragma once

#include "rompc/tube.hpp"

#include <fstream>
#include <iomanip>

namespace rompc {

struct VerifyOptions {
    double s0 = 0.0;            // initial off-manifold bound
    double delta0 = 0.0;        // initial prediction-error bound
    double x_r_radius = 0.25;   // ball for the initial reduced state
    Vector u_lo;                // admissible input box (empty = zero input)
    Vector u_hi;
    double d_magnitude = 0.0;   // ||u_d|| for actuation noise
    double period = 0.02;       // control period for input/disturbance resampling
    double dt_sim = 0.002;
    bool boundary_init = false; // draw the initial errors near the bound itself
    int jobs = 0;
};

struct TrialResult {
    int trial = 0;
    double max_s_ratio = 0.0;
    double max_delta_ratio = 0.0;
    bool left_domain = false;
    bool violated = false;
};

struct Prop1Report {
    int n_trials = 0;
    int violations = 0;
    int left_domain = 0;
    double max_s_ratio = 0.0;      // over trials that stayed in the certified domain
    double max_delta_ratio = 0.0;
    std::vector<TrialResult> trials;

    bool pass() const { return violations == 0; }

    std::string to_csv() const {
        std::ostringstream oss;
        oss << "trial,max_s_ratio,max_delta_ratio,left_domain\n";
        for (const auto& t : trials) {
            oss << t.trial << "," << std::setprecision(17) << t.max_s_ratio << ","
                << t.max_delta_ratio << "," << (t.left_domain ? 1 : 0) << "\n";
        }
        return oss.str();
    }
};

/// Empirical check of the comparison-lemma bounds: random initial conditions
/// consistent with (s0, delta0), random admissible inputs and disturbances;
/// the plant, the prediction model and the tubes are run side by side and
/// the ratios ||x_n_err|| / s and ||x_r - z_r|| / delta are recorded.
/// Trajectories leaving the certified ball are excluded from the violation
/// count, since the constants only hold there.
inline Prop1Report verify_prop1(const FullOrderModel& model, const SsmRom& rom,
                                const TubeParams& params, int n_trials, double t_final,
                                std::uint64_t seed, const VerifyOptions& opt = {}) {
    require(n_trials >= 1, "verify_prop1: need at least one trial");
    Prop1Report report;
    report.n_trials = n_trials;
    report.trials.resize(n_trials);

    const int nn = rom.n_f - rom.n;
    const Vector u_lo = opt.u_lo.size() ? opt.u_lo : Vector::Zero(model.m);
    const Vector u_hi = opt.u_hi.size() ? opt.u_hi : Vector::Zero(model.m);
    require(u_lo.size() == model.m && u_hi.size() == model.m,
            "verify_prop1: input box dimension mismatch");

    parallel_for(n_trials, opt.jobs, [&](int trial) {
        auto rng = make_rng(seed * 1000003ULL + static_cast<std::uint64_t>(trial));
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        // Initial conditions consistent with the tube initialization.
        auto draw = [&](int dim, double radius) {
            return opt.boundary_init ? sphere_sample(rng, dim, 0.995 * radius)
                                     : ball_sample(rng, dim, radius);
        };
        const Vector x_r0 = opt.x_r_radius > 0.0 ? draw(rom.n, opt.x_r_radius)
                                                 : Vector::Zero(rom.n);
        Vector x0 = lift(rom, x_r0);
        if (opt.s0 > 0.0) x0.tail(nn) += draw(nn, opt.s0);
        const Vector z_r0 =
            opt.delta0 > 0.0 ? Vector(x_r0 - draw(rom.n, opt.delta0)) : x_r0;

        // Random admissible input schedule, piecewise constant per period.
        const int periods = std::max(1, static_cast<int>(std::ceil(t_final / opt.period - 1e-9)));
        Matrix u_vals(model.m, periods);
        for (int k = 0; k < periods; ++k) {
            for (int i = 0; i < model.m; ++i) {
                u_vals(i, k) = u_lo[i] + (u_hi[i] - u_lo[i]) * unit(rng);
            }
        }
        PiecewiseConstantSignal u_signal(opt.period, std::move(u_vals));
        PiecewiseConstantSignal d_signal =
            opt.d_magnitude > 0.0
                ? sample_disturbance(model, opt.d_magnitude, opt.period, t_final,
                                     seed * 2000003ULL + static_cast<std::uint64_t>(trial))
                : PiecewiseConstantSignal::zero(opt.period, model.n_f, periods);

        TrialResult result;
        result.trial = trial;
        Trajectory traj;
        try {
            traj = simulate(model, x0, u_signal, d_signal, t_final, opt.dt_sim);
        } catch (const std::runtime_error&) {
            result.left_domain = true;  // divergence implies leaving the certified ball
            report.trials[trial] = result;
            return;
        }

        // Prediction model integrated with the same inputs, no disturbance.
        const int steps = traj.samples() - 1;
        Matrix z_traj(rom.n, steps + 1);
        z_traj.col(0) = z_r0;
        Vector z = z_r0;
        for (int k = 0; k < steps; ++k) {
            const double t = traj.times[k];
            const Vector u = u_signal.at(t);
            z = detail::rk4_step(
                [&](double, const Vector& zs) { return reduced_rhs(rom, zs, u); }, t, z,
                opt.dt_sim);
            z_traj.col(k + 1) = z;
        }

        // Exact tube propagation, sampled at the simulation grid.
        const int per_period = static_cast<int>(std::round(opt.period / opt.dt_sim));
        TubeState period_start{opt.s0, opt.delta0};
        InputNorms nu = input_norms(rom, u_signal.at(0.0));
        for (int k = 0; k <= steps; ++k) {
            const double t = traj.times[k];
            if (k > 0 && (k % per_period) == 0) {
                period_start = propagate_interval(params, period_start, nu, opt.period);
                nu = input_norms(rom, u_signal.at(t));
            }
            const double offset = (k % per_period) * opt.dt_sim;
            const TubeState bound =
                offset > 0.0 ? propagate_interval(params, period_start, nu, offset)
                             : period_start;

            const Vector x = traj.state(k);
            if (x.norm() > model.domain_radius || z_traj.col(k).norm() > rom.domain_radius) {
                result.left_domain = true;
                break;
            }
            const double err_n = off_manifold_error(rom, x);
            const double err_r = (x.head(rom.n) - z_traj.col(k)).norm();
            const double rs = bound.s > 0.0 ? err_n / bound.s : (err_n > 1e-12 ? 1e18 : 0.0);
            const double rd =
                bound.delta > 0.0 ? err_r / bound.delta : (err_r > 1e-12 ? 1e18 : 0.0);
            result.max_s_ratio = std::max(result.max_s_ratio, rs);
            result.max_delta_ratio = std::max(result.max_delta_ratio, rd);
        }
        result.violated = !result.left_domain &&
                          (result.max_s_ratio > 1.0 || result.max_delta_ratio > 1.0);
        report.trials[trial] = result;
    });

    for (const auto& t : report.trials) {
        if (t.left_domain) {
            ++report.left_domain;
            continue;
        }
        if (t.violated) ++report.violations;
        report.max_s_ratio = std::max(report.max_s_ratio, t.max_s_ratio);
        report.max_delta_ratio = std::max(report.max_delta_ratio, t.max_delta_ratio);
    }
    return report;
}

inline void write_report_csv(const Prop1Report& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << report.to_csv();
}

}  // namespace rompc
