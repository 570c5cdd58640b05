#pragma once

#include "rompc/constraints.hpp"
#include "rompc/qp.hpp"
#include "rompc/tube.hpp"

namespace rompc {

/// Terminal ingredients: nominal steady pair plus a positively invariant
/// rectangle [0, delta_max] x [0, s_max] for the tube states at u = u_bar,
/// paired with zero terminal cost and terminal law kappa = u_bar.
struct TerminalSet {
    Vector z_bar;
    Vector u_bar;
    double delta_max = 0.0;
    double s_max = 0.0;

    bool degenerate() const { return delta_max == 0.0 && s_max == 0.0; }
};

/// Target for the steady pair: either the reduced state directly or an
/// output setpoint solved through the manifold.
struct ReferenceTarget {
    enum class Kind { ReducedState, OutputSetpoint };
    Kind kind = Kind::ReducedState;
    Vector value;

    static ReferenceTarget reduced(Vector z) { return {Kind::ReducedState, std::move(z)}; }
    static ReferenceTarget output(Vector y) { return {Kind::OutputSetpoint, std::move(y)}; }
};

/// Solves r(z) + B_r u = 0 (and C w(z) = y_ref for output targets) by damped
/// Gauss-Newton with minimum-norm steps. Throws if the residual cannot be
/// brought below tol.
inline std::pair<Vector, Vector> solve_steady_pair(const SsmRom& rom,
                                                   const ReferenceTarget& ref,
                                                   double tol = 1e-10, int max_iter = 80) {
    const int n = rom.n;
    const int m = static_cast<int>(rom.B_r.cols());

    if (ref.kind == ReferenceTarget::Kind::ReducedState) {
        require(ref.value.size() == n, "solve_steady_pair: z reference dimension mismatch");
        const Vector z = ref.value;
        const Vector rhs = -(rom.A_r * z + rom.r_nl.eval(z));
        const Vector u = rom.B_r.completeOrthogonalDecomposition().solve(rhs);
        const double residual = (rom.A_r * z + rom.r_nl.eval(z) + rom.B_r * u).norm();
        if (residual > 1e-8) {
            throw std::runtime_error("solve_steady_pair: no steady input for this state");
        }
        return {z, u};
    }

    require(ref.value.size() == rom.C.rows(), "solve_steady_pair: y reference dimension mismatch");
    const Vector y_ref = ref.value;
    // Linear initialization through C V_r, then Gauss-Newton on the full map.
    Vector z = (rom.C.leftCols(n)).completeOrthogonalDecomposition().solve(y_ref);
    Vector u = rom.B_r.completeOrthogonalDecomposition().solve(-(rom.A_r * z + rom.r_nl.eval(z)));

    auto residual = [&](const Vector& zz, const Vector& uu) {
        Vector F(n + rom.C.rows());
        F.head(n) = rom.A_r * zz + rom.r_nl.eval(zz) + rom.B_r * uu;
        F.tail(rom.C.rows()) = rom.C * lift(rom, zz) - y_ref;
        return F;
    };

    Vector F = residual(z, u);
    for (int it = 0; it < max_iter && F.norm() > tol; ++it) {
        Matrix J(n + rom.C.rows(), n + m);
        J.topLeftCorner(n, n) = rom.A_r + rom.r_nl.jacobian(z);
        J.topRightCorner(n, m) = rom.B_r;
        J.bottomLeftCorner(rom.C.rows(), n) = rom.C * lift_jacobian(rom, z);
        J.bottomRightCorner(rom.C.rows(), m).setZero();
        const Vector step = J.completeOrthogonalDecomposition().solve(-F);
        double alpha = 1.0;
        const double f0 = F.norm();
        for (int ls = 0; ls < 40; ++ls) {
            const Vector z_new = z + alpha * step.head(n);
            const Vector u_new = u + alpha * step.tail(m);
            const Vector F_new = residual(z_new, u_new);
            if (F_new.norm() < f0 * (1.0 - 0.25 * alpha) || F_new.norm() < tol) {
                z = z_new;
                u = u_new;
                F = F_new;
                break;
            }
            alpha *= 0.5;
            if (ls == 39) {
                throw std::runtime_error("solve_steady_pair: Newton stalled on the setpoint");
            }
        }
    }
    if (F.norm() > 1e-8) {
        throw std::runtime_error("solve_steady_pair: steady pair did not converge");
    }
    return {z, u};
}

/// Steady state of the prediction model for a fixed input, by damped Newton.
inline Vector steady_state_for_input(const SsmRom& rom, const Vector& u, int max_iter = 80) {
    Vector z = Vector::Zero(rom.n);
    auto F = [&](const Vector& zz) {
        return Vector(rom.A_r * zz + rom.r_nl.eval(zz) + rom.B_r * u);
    };
    Vector f = F(z);
    for (int it = 0; it < max_iter && f.norm() > 1e-12; ++it) {
        const Matrix J = rom.A_r + rom.r_nl.jacobian(z);
        const Vector step = J.fullPivLu().solve(-f);
        double alpha = 1.0;
        for (int ls = 0; ls < 40; ++ls) {
            const Vector z_new = z + alpha * step;
            const Vector f_new = F(z_new);
            if (f_new.norm() < f.norm() * (1.0 - 0.25 * alpha) || f_new.norm() < 1e-12) {
                z = z_new;
                f = f_new;
                break;
            }
            alpha *= 0.5;
        }
    }
    if (f.norm() > 1e-8) {
        throw std::runtime_error("steady_state_for_input: Newton did not converge");
    }
    return z;
}

/// Steady pair for an output target with the steady input constrained to a
/// box: Gauss-Newton where each step solves a small QP that keeps u + du in
/// the box and near the box center (pretension-style interior choice).
inline std::pair<Vector, Vector> solve_steady_pair_boxed(const SsmRom& rom,
                                                         const Vector& y_ref,
                                                         const Vector& u_lo,
                                                         const Vector& u_hi,
                                                         Vector u_center = {},
                                                         int max_iter = 60) {
    const int n = rom.n;
    const int m = static_cast<int>(rom.B_r.cols());
    require(u_lo.size() == m && u_hi.size() == m, "solve_steady_pair_boxed: bad input box");
    if (u_center.size() == 0) u_center = 0.5 * (u_lo + u_hi);
    const double u_span = std::max(1.0, (u_hi - u_lo).maxCoeff());

    Vector u = u_center;
    Vector z = steady_state_for_input(rom, u);

    auto residual = [&](const Vector& zz, const Vector& uu) {
        Vector F(n + rom.C.rows());
        F.head(n) = rom.A_r * zz + rom.r_nl.eval(zz) + rom.B_r * uu;
        F.tail(rom.C.rows()) = rom.C * lift(rom, zz) - y_ref;
        return F;
    };

    Vector F = residual(z, u);
    const double tol = 1e-10 * (1.0 + y_ref.norm());
    for (int it = 0; it < max_iter && F.norm() > tol; ++it) {
        Matrix J(n + rom.C.rows(), n + m);
        J.topLeftCorner(n, n) = rom.A_r + rom.r_nl.jacobian(z);
        J.topRightCorner(n, m) = rom.B_r;
        J.bottomLeftCorner(rom.C.rows(), n) = rom.C * lift_jacobian(rom, z);
        J.bottomRightCorner(rom.C.rows(), m).setZero();

        QpProblem qp;
        qp.H = Matrix::Identity(n + m, n + m);
        qp.H.topLeftCorner(n, n) *= 2.0;
        qp.H.bottomRightCorner(m, m) *= 2.0 / (u_span * u_span);
        qp.f = Vector::Zero(n + m);
        qp.f.tail(m) = (2.0 / (u_span * u_span)) * (u - u_center);
        qp.Ae = J;
        qp.be = -F;
        qp.Ai = Matrix::Zero(2 * m, n + m);
        qp.bi = Vector(2 * m);
        for (int i = 0; i < m; ++i) {
            qp.Ai(2 * i, n + i) = 1.0;
            qp.bi[2 * i] = u_hi[i] - u[i];
            qp.Ai(2 * i + 1, n + i) = -1.0;
            qp.bi[2 * i + 1] = u[i] - u_lo[i];
        }
        const QpResult res = QpSolver().solve(qp);
        if (res.status != QpStatus::Optimal) {
            throw std::runtime_error(
                "solve_steady_pair_boxed: no steady input inside the input set for this "
                "output target");
        }
        double alpha = 1.0;
        bool stepped = false;
        for (int ls = 0; ls < 40; ++ls) {
            const Vector z_new = z + alpha * res.x.head(n);
            const Vector u_new = u + alpha * res.x.tail(m);
            const Vector F_new = residual(z_new, u_new);
            if (F_new.norm() < F.norm() * (1.0 - 0.25 * alpha) || F_new.norm() < tol) {
                z = z_new;
                u = u_new;
                F = F_new;
                stepped = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!stepped) break;
    }
    if (F.norm() > 1e-8) {
        throw std::runtime_error("solve_steady_pair_boxed: did not converge to a steady pair");
    }
    return {z, u.cwiseMax(u_lo).cwiseMin(u_hi)};
}

struct TerminalOptions {
    double inflation = 1.05;   // box corner relative to the tube equilibrium
    Vector u_lo, u_hi;         // optional input box for the steady input
    Vector u_center;           // preferred interior input for boxed solves
    bool exact_norms = false;  // size the box for the exact instead of the
                               // 1-norm input bounds (must match the OCP)
};

/// Steady pair + invariant tube box, validated against the tightened
/// constraints. Shrinks the corner toward the equilibrium if needed and
/// rejects references whose equilibrium tubes already violate them.
inline TerminalSet compute_terminal_set(const SsmRom& rom, const TubeParams& params,
                                        const PolytopicConstraints& cons,
                                        const ReferenceTarget& ref,
                                        const TerminalOptions& opt = {}) {
    auto [z_bar, u_bar] =
        (ref.kind == ReferenceTarget::Kind::OutputSetpoint && opt.u_lo.size())
            ? solve_steady_pair_boxed(rom, ref.value, opt.u_lo, opt.u_hi, opt.u_center)
            : solve_steady_pair(rom, ref);
    if (opt.u_lo.size()) {
        for (int i = 0; i < u_bar.size(); ++i) {
            if (u_bar[i] < opt.u_lo[i] - 1e-9 || u_bar[i] > opt.u_hi[i] + 1e-9) {
                throw std::runtime_error(
                    "compute_terminal_set: steady input leaves the input set");
            }
        }
    }
    if (!params.stable()) {
        throw std::runtime_error(
            "compute_terminal_set: unstable tube dynamics, no finite equilibrium");
    }
    const InputNorms nu_bar = opt.exact_norms ? input_norms(rom, u_bar)
                                              : input_norm_upper_bounds(rom, u_bar);
    const auto [s_eq, d_eq] = params.steady_state(nu_bar);

    TerminalSet ts;
    ts.z_bar = z_bar;
    ts.u_bar = u_bar;
    for (double factor : {opt.inflation, 0.5 * (opt.inflation + 1.0), 1.0}) {
        ts.delta_max = factor * d_eq;
        ts.s_max = factor * s_eq;
        if (max_tightened_value(cons, rom, z_bar, ts.delta_max, ts.s_max) <= 0.0) {
            return ts;
        }
    }
    throw std::runtime_error(
        "compute_terminal_set: tightened constraints infeasible at the steady pair; "
        "choose a reference closer to the origin");
}

struct TerminalReport {
    bool invariance_ok = false;
    bool constraints_ok = false;
    bool clf_ok = false;
    double max_box_excess = 0.0;        // positive means a grid start escaped the box
    double max_constraint_value = 0.0;  // over the checked trajectories

    bool pass() const { return invariance_ok && constraints_ok && clf_ok; }
};

/// Grid check of Assumption-style terminal conditions over one sampling
/// period: tube trajectories from the box boundary stay in the box and keep
/// the tightened constraints; the zero terminal cost is a CLF because the
/// stage cost vanishes at the steady pair.
inline TerminalReport check_terminal(const TerminalSet& ts, const SsmRom& rom,
                                     const TubeParams& params,
                                     const PolytopicConstraints& cons, double dt,
                                     int grid = 9, bool exact_norms = false) {
    TerminalReport report;
    const InputNorms nu = exact_norms ? input_norms(rom, ts.u_bar)
                                      : input_norm_upper_bounds(rom, ts.u_bar);

    std::vector<TubeState> starts;
    starts.push_back({ts.s_max, ts.delta_max});
    for (int i = 0; i <= grid; ++i) {
        const double f = static_cast<double>(i) / grid;
        starts.push_back({ts.s_max, f * ts.delta_max});
        starts.push_back({f * ts.s_max, ts.delta_max});
    }

    double box_excess = -std::numeric_limits<double>::infinity();
    double worst_cons = -std::numeric_limits<double>::infinity();
    const int substeps = 10;
    for (const auto& start : starts) {
        TubeState cur = start;
        worst_cons = std::max(
            worst_cons, max_tightened_value(cons, rom, ts.z_bar, cur.delta, cur.s));
        for (int k = 0; k < substeps; ++k) {
            cur = propagate_interval(params, cur, nu, dt / substeps);
            worst_cons = std::max(
                worst_cons, max_tightened_value(cons, rom, ts.z_bar, cur.delta, cur.s));
        }
        box_excess = std::max(box_excess,
                              std::max(cur.s - ts.s_max, cur.delta - ts.delta_max));
    }
    report.max_box_excess = box_excess;
    report.max_constraint_value = worst_cons;
    report.invariance_ok = box_excess <= 1e-9 * std::max(1.0, std::max(ts.s_max, ts.delta_max));
    report.constraints_ok = worst_cons <= 1e-9;
    // Stage cost is ||z - z_bar||_Q^2 + ||u - u_bar||_R^2, so the steady pair
    // has zero cost and l_f = 0 with kappa = u_bar satisfies the decrease.
    report.clf_ok =
        (rom.A_r * ts.z_bar + rom.r_nl.eval(ts.z_bar) + rom.B_r * ts.u_bar).norm() <= 1e-8;
    return report;
}

}  // namespace rompc
