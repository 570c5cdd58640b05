#pragma once

#include "rompc/constraints.hpp"
#include "rompc/tube.hpp"

namespace rompc {

/// Open-loop excitation protocol: phases of constant input-norm level with
/// additive Gaussian-direction input noise, resampled every control period.
struct ExcitationSchedule {
    struct Phase {
        double duration = 5.0;
        double level = 0.0;  // input 2-norm during the phase
    };
    std::vector<Phase> phases;
    double noise_norm = 400.0;
    std::uint64_t seed = 0;

    double total_duration() const {
        double total = 0.0;
        for (const auto& p : phases) total += p.duration;
        return total;
    }

    double level_at(double t) const {
        double acc = 0.0;
        for (const auto& p : phases) {
            acc += p.duration;
            if (t < acc - 1e-12) return p.level;
        }
        return phases.empty() ? 0.0 : phases.back().level;
    }

    void validate() const {
        require(!phases.empty(), "ExcitationSchedule: no phases");
        for (const auto& p : phases) {
            require(p.duration > 0.0, "ExcitationSchedule: phase durations must be positive");
        }
        require(noise_norm >= 0.0, "ExcitationSchedule: noise_norm must be nonnegative");
    }
};

/// Default protocol: zero, moderate, large, moderate, zero inputs for five
/// seconds each, with noise of 2-norm 400.
inline ExcitationSchedule make_schedule(double moderate_level = 800.0,
                                        double large_level = 2000.0,
                                        double noise_norm = 400.0, std::uint64_t seed = 0) {
    ExcitationSchedule s;
    s.phases = {{5.0, 0.0}, {5.0, moderate_level}, {5.0, large_level},
                {5.0, moderate_level}, {5.0, 0.0}};
    s.noise_norm = noise_norm;
    s.seed = seed;
    s.validate();
    return s;
}

/// Realizes the protocol as a piecewise-constant input schedule inside the
/// input box: per period, a nonnegative-orthant direction at the phase level
/// plus spherical noise, clamped to the box.
inline PiecewiseConstantSignal make_excitation_inputs(const ExcitationSchedule& schedule,
                                                      int m, double period,
                                                      const Vector& u_lo,
                                                      const Vector& u_hi) {
    schedule.validate();
    const double t_final = schedule.total_duration();
    const int count = static_cast<int>(std::round(t_final / period));
    Matrix u(m, count);
    auto rng = make_rng(schedule.seed * 7919ULL + 13ULL);
    for (int k = 0; k < count; ++k) {
        const double level = schedule.level_at(k * period);
        Vector dir = sphere_sample(rng, m, 1.0).cwiseAbs();
        const double dn = dir.norm();
        Vector base = (level / (dn > 1e-12 ? dn : 1.0)) * dir;
        if (schedule.noise_norm > 0.0) base += sphere_sample(rng, m, schedule.noise_norm);
        u.col(k) = base.cwiseMax(u_lo).cwiseMin(u_hi);
    }
    return {period, std::move(u)};
}

/// Integrates the prediction model through an input schedule, sampled at dt.
inline Matrix integrate_reduced(const SsmRom& rom, const Vector& z0,
                                const PiecewiseConstantSignal& u_signal, double t_final,
                                double dt) {
    const int steps = static_cast<int>(std::round(t_final / dt));
    Matrix z_traj(rom.n, steps + 1);
    Vector z = z0;
    z_traj.col(0) = z;
    for (int k = 0; k < steps; ++k) {
        const Vector u = u_signal.at(k * dt);
        z = detail::rk4_step(
            [&](double, const Vector& zs) { return reduced_rhs(rom, zs, u); }, 0.0, z, dt);
        z_traj.col(k + 1) = z;
    }
    return z_traj;
}

struct FitResult {
    double L_fnl = 0.0;
    double L_rnl = 0.0;
    double B_bar = 0.0;
    double L_bar = 0.0;
    double d_bar = 0.0;
    double d_hat = 0.0;
    double objective = 0.0;
    double envelope_margin = 0.0;  // min over samples of delta - ||x_r - z_r||
    int evaluations = 0;

    TubeParams to_params(double lambda_An, double lambda_Ar) const {
        return TubeParams::data_driven(lambda_An, lambda_Ar, L_fnl, L_rnl, L_bar, B_bar,
                                       d_bar, d_hat);
    }
};

struct FitOptions {
    int grid_points = 9;
    int refinements = 3;
    int max_sweeps = 8;
    double lo[4] = {1e-3, 1e-4, 1e-6, 1e-6};  // L_fnl, L_rnl, B_bar, L_bar
    double hi[4] = {1e3, 1e2, 1e2, 1e2};
    Vector row_weights;  // optional per-constraint-row weights (default: all one)
};

namespace detail {

struct TubeFitProblem {
    double lambda_An, lambda_Ar;
    double d_bar, d_hat;
    double dt;
    std::vector<double> u_norm;   // per sample interval
    std::vector<double> err;      // ||x_r - z_r|| per sample
    double obj_delta_weight = 0.0;  // sum_j w_j ||G_j|| L_Cw
    double obj_s_weight = 0.0;      // sum_j w_j ||G_j C||

    /// Integrates the tubes for a candidate and returns (objective, margin).
    std::pair<double, double> evaluate(const double c[4]) const {
        TubeParams p = TubeParams::data_driven(lambda_An, lambda_Ar, c[0], c[1], c[3], c[2],
                                               d_bar, d_hat);
        const TubeStepCoeffs step = tube_step_coeffs(p, dt);
        double s = 0.0, delta = 0.0;
        double objective = 0.0;
        double margin = std::numeric_limits<double>::infinity();
        const int K = static_cast<int>(err.size());
        for (int k = 0; k < K; ++k) {
            margin = std::min(margin, delta - err[k]);
            objective += (obj_delta_weight * delta + obj_s_weight * s) * dt;
            if (k + 1 < K) {
                const double cs = p.B_bar * u_norm[k] + p.d_hat;
                const double s_next = step.e_s * s + step.g_s * cs;
                delta = step.e_d * delta + p.L_fnl * (step.psi * s + step.K * cs) +
                        step.g_d * p.d_bar;
                s = s_next;
            }
        }
        return {objective, margin};
    }
};

}  // namespace detail

/// Fits (L_fnl, L_rnl, B_bar, L_bar) by minimizing the integrated tightening
/// subject to the envelope constraint delta(t) >= ||x_r(t) - z_r(t)|| at all
/// samples, with tubes integrated in closed form from delta(0) = s(0) = 0.
/// Nested search: log-spaced coordinate descent with grid refinement; the
/// returned point is the best feasible one evaluated.
inline FitResult fit_tube_constants(const Matrix& x_r_data, const Matrix& z_r_data,
                                    const Matrix& u_data, double dt, double d_bar,
                                    double d_hat, const PolytopicConstraints& cons,
                                    const SsmRom& rom, const FitOptions& opt = {}) {
    require(x_r_data.rows() == rom.n && z_r_data.rows() == rom.n,
            "fit_tube_constants: reduced-state dimension mismatch");
    require(x_r_data.cols() == z_r_data.cols() && u_data.cols() >= x_r_data.cols() - 1,
            "fit_tube_constants: trajectories are not time-aligned");
    require(d_bar >= 0.0 && d_hat >= 0.0, "fit_tube_constants: bounds must be nonnegative");

    detail::TubeFitProblem prob;
    prob.lambda_An = rom.constants.lambda_An;
    prob.lambda_Ar = rom.constants.lambda_Ar;
    prob.d_bar = d_bar;
    prob.d_hat = d_hat;
    prob.dt = dt;
    const int K = static_cast<int>(x_r_data.cols());
    prob.err.resize(K);
    prob.u_norm.resize(K);
    for (int k = 0; k < K; ++k) {
        prob.err[k] = (x_r_data.col(k) - z_r_data.col(k)).norm();
        prob.u_norm[k] = u_data.col(std::min<int>(k, u_data.cols() - 1)).norm();
    }
    Vector weights = opt.row_weights.size() ? opt.row_weights : Vector::Ones(cons.rows());
    require(weights.size() == cons.rows(), "fit_tube_constants: bad row weights");
    for (int j = 0; j < cons.rows(); ++j) {
        prob.obj_delta_weight += weights[j] * cons.row_lipschitz(j) * rom.constants.L_Cw;
        prob.obj_s_weight += weights[j] * (cons.G.row(j) * rom.C).norm();
    }

    // Log-spaced grids per coordinate.
    auto make_grid = [&](double lo, double hi, int points) {
        std::vector<double> g(points);
        for (int i = 0; i < points; ++i) {
            g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
        }
        return g;
    };
    std::array<std::vector<double>, 4> grids;
    for (int c = 0; c < 4; ++c) grids[c] = make_grid(opt.lo[c], opt.hi[c], opt.grid_points);

    double best[4] = {opt.hi[0], opt.hi[1], opt.hi[2], opt.hi[3]};
    int evaluations = 0;
    auto eval = [&](const double c[4]) {
        ++evaluations;
        return prob.evaluate(c);
    };
    auto [obj0, margin0] = eval(best);
    if (margin0 < 0.0) {
        throw std::runtime_error(
            "fit_tube_constants: no feasible point on the coarsest grid; the envelope "
            "cannot cover the data even at the largest constants, increase d_hat");
    }
    double best_obj = obj0;

    for (int refine = 0; refine <= opt.refinements; ++refine) {
        for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
            bool improved = false;
            for (int c = 0; c < 4; ++c) {
                double trial[4] = {best[0], best[1], best[2], best[3]};
                for (double v : grids[c]) {
                    trial[c] = v;
                    const auto [obj, margin] = eval(trial);
                    if (margin >= 0.0 && obj < best_obj - 1e-15) {
                        best_obj = obj;
                        best[c] = v;
                        improved = true;
                    }
                }
            }
            if (!improved) break;
        }
        if (refine < opt.refinements) {
            // Shrink each grid around the incumbent by one spacing factor.
            for (int c = 0; c < 4; ++c) {
                const double factor =
                    std::pow(opt.hi[c] / opt.lo[c],
                             1.0 / (opt.grid_points - 1));
                const double span = std::pow(factor, 1.0 / (refine + 1.0));
                const double lo = std::max(opt.lo[c], best[c] / span);
                const double hi = std::min(opt.hi[c], best[c] * span);
                grids[c] = make_grid(std::max(lo, 1e-12), std::max(hi, 2e-12),
                                     opt.grid_points);
            }
        }
    }

    FitResult result;
    result.L_fnl = best[0];
    result.L_rnl = best[1];
    result.B_bar = best[2];
    result.L_bar = best[3];
    result.d_bar = d_bar;
    result.d_hat = d_hat;
    const auto [obj, margin] = prob.evaluate(best);
    result.objective = obj;
    result.envelope_margin = margin;
    result.evaluations = evaluations;
    return result;
}

/// Envelope check of fitted constants on an arbitrary trajectory pair.
inline double envelope_margin(const FitResult& fit, const SsmRom& rom, const Matrix& x_r_data,
                              const Matrix& z_r_data, const Matrix& u_data, double dt) {
    detail::TubeFitProblem prob;
    prob.lambda_An = rom.constants.lambda_An;
    prob.lambda_Ar = rom.constants.lambda_Ar;
    prob.d_bar = fit.d_bar;
    prob.d_hat = fit.d_hat;
    prob.dt = dt;
    const int K = static_cast<int>(x_r_data.cols());
    prob.err.resize(K);
    prob.u_norm.resize(K);
    for (int k = 0; k < K; ++k) {
        prob.err[k] = (x_r_data.col(k) - z_r_data.col(k)).norm();
        prob.u_norm[k] = u_data.col(std::min<int>(k, u_data.cols() - 1)).norm();
    }
    const double c[4] = {fit.L_fnl, fit.L_rnl, fit.B_bar, fit.L_bar};
    return prob.evaluate(c).second;
}

}  // namespace rompc
