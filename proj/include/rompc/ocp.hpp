#pragma once

#include "rompc/qp.hpp"
#include "rompc/terminal.hpp"
#include "rompc/tube.hpp"

#include <chrono>

namespace rompc {

enum class Scheme { RnRompc, NominalSoft, BufferSoft };

inline std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::RnRompc: return "rn-rompc";
        case Scheme::NominalSoft: return "nominal-soft";
        case Scheme::BufferSoft: return "buffer-soft";
    }
    return "?";
}

inline Scheme scheme_from_name(const std::string& name) {
    if (name == "rn-rompc") return Scheme::RnRompc;
    if (name == "nominal-soft") return Scheme::NominalSoft;
    if (name == "buffer-soft") return Scheme::BufferSoft;
    throw std::invalid_argument("unknown scheme: " + name);
}

/// Piecewise reference: each segment provides the stage-cost steady pair,
/// the terminal data and the raw output target it was derived from.
struct ReferenceSegment {
    double t_from = 0.0;
    Vector z_ref;
    Vector u_ref;
    TerminalSet terminal;
    Vector y_ref;
};

class ReferenceSchedule {
public:
    void add(ReferenceSegment seg) {
        require(segments_.empty() || seg.t_from > segments_.back().t_from,
                "ReferenceSchedule: segments must be added in increasing time order");
        segments_.push_back(std::move(seg));
    }

    const ReferenceSegment& at(double t) const {
        require(!segments_.empty(), "ReferenceSchedule: empty");
        int lo = 0;
        for (int i = 1; i < static_cast<int>(segments_.size()); ++i) {
            if (segments_[i].t_from <= t + 1e-12) lo = i;
        }
        return segments_[lo];
    }

    const std::vector<ReferenceSegment>& segments() const { return segments_; }

private:
    std::vector<ReferenceSegment> segments_;
};

struct OcpConfig {
    int N = 3;
    double dt = 0.02;
    Matrix Q;  // n x n
    Matrix R;  // m x m
    Vector u_lo, u_hi;
    Scheme scheme = Scheme::RnRompc;
    Vector buffer;              // per-row shrink of g (buffer-soft only)
    double soft_penalty = 1e4;  // per unit violation and second
    bool fix_initial_state = false;
    bool exact_input_norms = false;  // 2-norm tube forcing frozen at the iterate
    double trust_region_init = 0.5;  // fraction of the rom domain radius
    double trust_region_min = 1e-4;
    int max_scp_iter = 20;
    double scp_tol = 1e-6;
    double aux_reg = 1e-6;
    double trust_penalty = 1e3;

    double horizon() const { return N * dt; }

    void validate(int n, int m) const {
        require(N >= 1 && dt > 0.0, "OcpConfig: need N >= 1 and dt > 0");
        require(Q.rows() == n && Q.cols() == n && R.rows() == m && R.cols() == m,
                "OcpConfig: weight matrices have wrong shape");
        Eigen::SelfAdjointEigenSolver<Matrix> eq(0.5 * (Q + Q.transpose()));
        Eigen::SelfAdjointEigenSolver<Matrix> er(0.5 * (R + R.transpose()));
        require(eq.eigenvalues().minCoeff() > 0.0, "OcpConfig: Q must be positive definite");
        require(er.eigenvalues().minCoeff() > 0.0, "OcpConfig: R must be positive definite");
        require(u_lo.size() == m && u_hi.size() == m && (u_hi - u_lo).minCoeff() >= 0.0,
                "OcpConfig: bad input box");
    }
};

/// Discrete-time prediction maps: one RK4 step per sampling period for the
/// reduced dynamics (zero-order-hold input) and the exact affine step for
/// the tubes, shared coefficient-for-coefficient with propagate_interval.
struct DiscreteMaps {
    const SsmRom* rom = nullptr;
    const TubeParams* params = nullptr;
    double dt = 0.0;
    TubeStepCoeffs tube;

    Vector z_step(const Vector& z, const Vector& u) const {
        return detail::rk4_step(
            [&](double, const Vector& zs) { return reduced_rhs(*rom, zs, u); }, 0.0, z, dt);
    }

    /// Exact Jacobians of the RK4 step map by stage-wise chain rule.
    void z_step_jacobians(const Vector& z, const Vector& u, Matrix& A, Matrix& B) const {
        const int n = rom->n;
        const double h = dt;
        auto f = [&](const Vector& zs) { return reduced_rhs(*rom, zs, u); };
        auto Jf = [&](const Vector& zs) { return Matrix(rom->A_r + rom->r_nl.jacobian(zs)); };

        const Vector k1 = f(z);
        const Matrix A1 = Jf(z);
        const Matrix B1 = rom->B_r;
        const Vector z2 = z + 0.5 * h * k1;
        const Matrix J2 = Jf(z2);
        const Matrix A2 = J2 * (Matrix::Identity(n, n) + 0.5 * h * A1);
        const Matrix B2 = J2 * (0.5 * h * B1) + rom->B_r;
        const Vector k2 = f(z2);
        const Vector z3 = z + 0.5 * h * k2;
        const Matrix J3 = Jf(z3);
        const Matrix A3 = J3 * (Matrix::Identity(n, n) + 0.5 * h * A2);
        const Matrix B3 = J3 * (0.5 * h * B2) + rom->B_r;
        const Vector k3 = f(z3);
        const Vector z4 = z + h * k3;
        const Matrix J4 = Jf(z4);
        const Matrix A4 = J4 * (Matrix::Identity(n, n) + h * A3);
        const Matrix B4 = J4 * (h * B3) + rom->B_r;

        A = Matrix::Identity(n, n) + (h / 6.0) * (A1 + 2.0 * A2 + 2.0 * A3 + A4);
        B = (h / 6.0) * (B1 + 2.0 * B2 + 2.0 * B3 + B4);
    }

    TubeState tube_step(const TubeState& state, const InputNorms& nu) const {
        return propagate_interval(*params, state, nu, dt);
    }
};

inline DiscreteMaps discretize(const SsmRom& rom, const TubeParams& params,
                               const OcpConfig& cfg) {
    cfg.validate(rom.n, static_cast<int>(rom.B_r.cols()));
    DiscreteMaps maps;
    maps.rom = &rom;
    maps.params = &params;
    maps.dt = cfg.dt;
    maps.tube = tube_step_coeffs(params, cfg.dt);
    return maps;
}

/// SCP iterate: nominal trajectory and input sequence.
struct Iterate {
    Matrix z;  // n x (N+1)
    Matrix u;  // m x N
};

/// Stage references resolved on the prediction grid.
struct StageRefs {
    std::vector<Vector> z_ref;  // N entries
    std::vector<Vector> u_ref;  // N entries
    const TerminalSet* terminal = nullptr;
};

/// Convex subproblem plus the variable layout needed to decode it.
struct Subproblem {
    QpProblem qp;
    int n = 0, m = 0, N = 0, n_h = 0;
    bool tubes = false;   // rn-rompc
    bool slacks = false;  // soft schemes
    double u_scale = 1.0;
    int z_off(int k) const { return k * n; }
    int u_off(int k) const { return (N + 1) * n + k * m; }
    int t_off(int k) const { return (N + 1) * n + N * m + k * m; }
    int eps_off() const { return (N + 1) * n + 2 * N * m; }
    int delta_off(int k) const { return eps_off() + n + k; }
    int s_off(int k) const { return delta_off(N + 1) + k; }
    int sigma_off() const {
        return tubes ? s_off(N + 1) : (N + 1) * n + N * m;
    }
    int xi_off(int k, int j) const { return sigma_off() + 1 + k * n_h + j; }
    int vars() const { return sigma_off() + 1 + (slacks ? (N + 1) * n_h : 0); }
};

/// Builds the linear-quadratic subproblem about the given iterate. Input
/// norms in the tube recursion use the columnwise 1-norm over-bound, keeping
/// the program a QP; tube states are eliminated against their exact affine
/// recursion via equality constraints.
inline Subproblem build_subproblem(const DiscreteMaps& maps, const Iterate& lin,
                                   const Vector& x_r, double s0, const OcpConfig& cfg,
                                   const SsmRom& rom, const TubeParams& params,
                                   const PolytopicConstraints& cons, const StageRefs& refs,
                                   double trust_radius) {
    const int n = rom.n;
    const int m = static_cast<int>(rom.B_r.cols());
    const int N = cfg.N;
    const int n_h = cons.rows();

    Subproblem sp;
    sp.n = n;
    sp.m = m;
    sp.N = N;
    sp.n_h = n_h;
    sp.tubes = cfg.scheme == Scheme::RnRompc;
    sp.slacks = cfg.scheme != Scheme::RnRompc;
    sp.u_scale = std::max({1.0, cfg.u_hi.cwiseAbs().maxCoeff(), cfg.u_lo.cwiseAbs().maxCoeff()});
    const double us = sp.u_scale;
    const int nv = sp.vars();

    // Per-input 1-norm weights of the tube forcing.
    Vector w_input = Vector::Zero(m);
    double base_s = 0.0;
    if (sp.tubes) {
        if (params.variant == TubeParams::Variant::ModelBased) {
            for (int i = 0; i < m; ++i) {
                w_input[i] = rom.B_n.col(i).norm() + params.L_wnl * rom.B_r.col(i).norm();
            }
            base_s = (1.0 + params.L_wnl) * params.d_bar;
        } else {
            w_input.setConstant(params.B_bar);
            base_s = params.d_hat;
        }
    }

    // Objective.
    Matrix H = Matrix::Zero(nv, nv);
    Vector f = Vector::Zero(nv);
    for (int k = 0; k < N; ++k) {
        H.block(sp.z_off(k), sp.z_off(k), n, n) = 2.0 * cfg.dt * cfg.Q;
        f.segment(sp.z_off(k), n) = -2.0 * cfg.dt * (cfg.Q * refs.z_ref[k]);
        H.block(sp.u_off(k), sp.u_off(k), m, m) = 2.0 * cfg.dt * us * us * cfg.R;
        f.segment(sp.u_off(k), m) = -2.0 * cfg.dt * us * (cfg.R * refs.u_ref[k]);
    }
    for (int i = 0; i < nv; ++i) H(i, i) += 2.0 * cfg.aux_reg;
    H(sp.sigma_off(), sp.sigma_off()) += 2.0 * cfg.trust_penalty;
    f[sp.sigma_off()] += 1.0;  // keeps the slack at zero when inactive
    if (sp.slacks) {
        for (int k = 0; k <= N; ++k) {
            for (int j = 0; j < n_h; ++j) f[sp.xi_off(k, j)] += cfg.soft_penalty * cfg.dt;
        }
    }

    // Equalities.
    const int me = (cfg.fix_initial_state ? n : 0) + N * n + n +
                   (sp.tubes ? 1 + 2 * N : 0);
    Matrix Ae = Matrix::Zero(me, nv);
    Vector be = Vector::Zero(me);
    int row = 0;
    if (cfg.fix_initial_state) {
        for (int i = 0; i < n; ++i) {
            Ae(row, sp.z_off(0) + i) = 1.0;
            be[row++] = x_r[i];
        }
    }
    Matrix Ak(n, n), Bk(n, m);
    for (int k = 0; k < N; ++k) {
        maps.z_step_jacobians(lin.z.col(k), lin.u.col(k), Ak, Bk);
        const Vector ck = maps.z_step(lin.z.col(k), lin.u.col(k)) - Ak * lin.z.col(k) -
                          Bk * lin.u.col(k);
        Ae.block(row, sp.z_off(k + 1), n, n) = Matrix::Identity(n, n);
        Ae.block(row, sp.z_off(k), n, n) = -Ak;
        Ae.block(row, sp.u_off(k), n, m) = -us * Bk;
        be.segment(row, n) = ck;
        row += n;
    }
    Ae.block(row, sp.z_off(N), n, n) = Matrix::Identity(n, n);
    be.segment(row, n) = refs.terminal->z_bar;
    row += n;
    if (sp.tubes) {
        Ae(row, sp.s_off(0)) = 1.0;
        be[row++] = s0;
        const auto& tc = maps.tube;
        for (int k = 0; k < N; ++k) {
            // s_{k+1} = e_s s_k + g_s c_k with c_k = base_s + sum_i w_i |u_i|.
            Ae(row, sp.s_off(k + 1)) = 1.0;
            Ae(row, sp.s_off(k)) = -tc.e_s;
            double cs_const = base_s;
            if (cfg.exact_input_norms) {
                cs_const = params.s_forcing(input_norms(rom, lin.u.col(k)));
            } else {
                for (int i = 0; i < m; ++i) Ae(row, sp.t_off(k) + i) = -tc.g_s * w_input[i] * us;
            }
            be[row++] = tc.g_s * cs_const;
            // delta_{k+1} = e_d delta_k + L_fnl (psi s_k + K c_k) + g_d d_bar.
            Ae(row, sp.delta_off(k + 1)) = 1.0;
            Ae(row, sp.delta_off(k)) = -tc.e_d;
            Ae(row, sp.s_off(k)) = -params.L_fnl * tc.psi;
            if (!cfg.exact_input_norms) {
                for (int i = 0; i < m; ++i) {
                    Ae(row, sp.t_off(k) + i) = -params.L_fnl * tc.K * w_input[i] * us;
                }
            }
            be[row++] = params.L_fnl * tc.K * cs_const + tc.g_d * params.delta_forcing();
        }
    }

    // Inequalities.
    int mi = 2 * N * m + 2 * (N + 1) * n + 1;  // input box, trust region, sigma >= 0
    if (sp.tubes) mi += 2 * N * m + 2 * n + 1 + (N + 1) * n_h + 2;
    if (sp.slacks) mi += (N + 1) * n_h + (N + 1) * n_h;
    Matrix Ai = Matrix::Zero(mi, nv);
    Vector bi = Vector::Zero(mi);
    row = 0;
    for (int k = 0; k < N; ++k) {
        for (int i = 0; i < m; ++i) {
            Ai(row, sp.u_off(k) + i) = 1.0;
            bi[row++] = cfg.u_hi[i] / us;
            Ai(row, sp.u_off(k) + i) = -1.0;
            bi[row++] = -cfg.u_lo[i] / us;
        }
    }
    for (int k = 0; k <= N; ++k) {
        for (int i = 0; i < n; ++i) {
            Ai(row, sp.z_off(k) + i) = 1.0;
            Ai(row, sp.sigma_off()) = -1.0;
            bi[row++] = lin.z(i, k) + trust_radius;
            Ai(row, sp.z_off(k) + i) = -1.0;
            Ai(row, sp.sigma_off()) = -1.0;
            bi[row++] = -lin.z(i, k) + trust_radius;
        }
    }
    Ai(row, sp.sigma_off()) = -1.0;
    bi[row++] = 0.0;

    if (sp.tubes) {
        for (int k = 0; k < N; ++k) {
            for (int i = 0; i < m; ++i) {
                Ai(row, sp.u_off(k) + i) = 1.0;
                Ai(row, sp.t_off(k) + i) = -1.0;
                bi[row++] = 0.0;
                Ai(row, sp.u_off(k) + i) = -1.0;
                Ai(row, sp.t_off(k) + i) = -1.0;
                bi[row++] = 0.0;
            }
        }
        for (int i = 0; i < n; ++i) {
            Ai(row, sp.z_off(0) + i) = -1.0;
            Ai(row, sp.eps_off() + i) = -1.0;
            bi[row++] = -x_r[i];
            Ai(row, sp.z_off(0) + i) = 1.0;
            Ai(row, sp.eps_off() + i) = -1.0;
            bi[row++] = x_r[i];
        }
        for (int i = 0; i < n; ++i) Ai(row, sp.eps_off() + i) = 1.0;
        Ai(row, sp.delta_off(0)) = -1.0;
        bi[row++] = 0.0;
        // Tightened constraints, linearized through the lift.
        for (int k = 0; k <= N; ++k) {
            const Vector z_lin = lin.z.col(k);
            const Matrix GCW = cons.G * (rom.C * lift_jacobian(rom, z_lin));  // n_h x n
            const Vector base = cons.G * (rom.C * lift(rom, z_lin)) - cons.g;
            for (int j = 0; j < n_h; ++j) {
                const double lh = cons.row_lipschitz(j);
                Ai.block(row, sp.z_off(k), 1, n) = GCW.row(j);
                Ai(row, sp.delta_off(k)) = lh * rom.constants.L_Cw;
                Ai(row, sp.s_off(k)) = lh * rom.c_norm();
                bi[row++] = -base[j] + GCW.row(j).dot(z_lin);
            }
        }
        Ai(row, sp.delta_off(N)) = 1.0;
        bi[row++] = refs.terminal->delta_max;
        Ai(row, sp.s_off(N)) = 1.0;
        bi[row++] = refs.terminal->s_max;
    }

    if (sp.slacks) {
        Vector g_eff = cons.g;
        if (cfg.scheme == Scheme::BufferSoft && cfg.buffer.size() == n_h) g_eff -= cfg.buffer;
        for (int k = 0; k <= N; ++k) {
            const Vector z_lin = lin.z.col(k);
            const Matrix GCW = cons.G * (rom.C * lift_jacobian(rom, z_lin));
            const Vector base = cons.G * (rom.C * lift(rom, z_lin)) - g_eff;
            for (int j = 0; j < n_h; ++j) {
                Ai.block(row, sp.z_off(k), 1, n) = GCW.row(j);
                Ai(row, sp.xi_off(k, j)) = -1.0;
                bi[row++] = -base[j] + GCW.row(j).dot(z_lin);
            }
        }
        for (int k = 0; k <= N; ++k) {
            for (int j = 0; j < n_h; ++j) {
                Ai(row, sp.xi_off(k, j)) = -1.0;
                bi[row++] = 0.0;
            }
        }
    }

    sp.qp.H = std::move(H);
    sp.qp.f = std::move(f);
    sp.qp.Ae = std::move(Ae);
    sp.qp.be = std::move(be);
    sp.qp.Ai = std::move(Ai);
    sp.qp.bi = std::move(bi);
    return sp;
}

/// Thin wrapper: the subproblem is a dense strictly convex QP by
/// construction, solved by the dual active-set method.
inline QpResult solve_convex_subproblem(const Subproblem& sp) {
    return QpSolver().solve(sp.qp);
}

inline Iterate decode_iterate(const Subproblem& sp, const Vector& x) {
    Iterate it;
    it.z.resize(sp.n, sp.N + 1);
    it.u.resize(sp.m, sp.N);
    for (int k = 0; k <= sp.N; ++k) it.z.col(k) = x.segment(sp.z_off(k), sp.n);
    for (int k = 0; k < sp.N; ++k) it.u.col(k) = sp.u_scale * x.segment(sp.u_off(k), sp.m);
    return it;
}

enum class OcpStatus { Optimal, MaxIterations, Infeasible };

inline std::string ocp_status_name(OcpStatus s) {
    switch (s) {
        case OcpStatus::Optimal: return "optimal";
        case OcpStatus::MaxIterations: return "max-iters";
        case OcpStatus::Infeasible: return "infeasible";
    }
    return "?";
}

struct OcpSolution {
    OcpStatus status = OcpStatus::Infeasible;
    Matrix u_traj;       // m x N
    Matrix z_traj;       // n x (N+1)
    Vector s_traj;       // N+1, re-propagated through the exact recursion
    Vector delta_traj;   // N+1
    double cost = 0.0;
    int scp_iters = 0;
    double dyn_residual = 0.0;
    double max_tightened = 0.0;  // exact tightened value at the solution
    double max_slack = 0.0;      // soft schemes: largest constraint violation allowed
    double solve_seconds = 0.0;
};

namespace detail {

inline double dynamics_residual(const DiscreteMaps& maps, const Iterate& it) {
    double worst = 0.0;
    for (int k = 0; k < it.u.cols(); ++k) {
        worst = std::max(worst,
                         (it.z.col(k + 1) - maps.z_step(it.z.col(k), it.u.col(k))).norm());
    }
    return worst;
}

/// Exact tube trajectories for a candidate: 2-norm input terms, exact flow.
inline void repropagate_tubes(const DiscreteMaps& maps, const SsmRom& rom, const Iterate& it,
                              const Vector& x_r, double s0, Vector& s_traj,
                              Vector& delta_traj) {
    const int N = static_cast<int>(it.u.cols());
    s_traj.resize(N + 1);
    delta_traj.resize(N + 1);
    TubeState tube{s0, (x_r - it.z.col(0)).norm()};
    s_traj[0] = tube.s;
    delta_traj[0] = tube.delta;
    for (int k = 0; k < N; ++k) {
        tube = maps.tube_step(tube, input_norms(rom, it.u.col(k)));
        s_traj[k + 1] = tube.s;
        delta_traj[k + 1] = tube.delta;
    }
}

}  // namespace detail

/// Sequential convex programming loop: linearize, solve the QP, accept on
/// nonlinear-residual decrease, shrink the trust region on rejection or
/// infeasibility. Before returning, tubes are re-propagated through the
/// exact recursion with exact input norms so the reported radii are valid.
inline OcpSolution solve_ocp(const Vector& x_r, double s0, const Iterate* warm_start,
                             const OcpConfig& cfg, const DiscreteMaps& maps,
                             const SsmRom& rom, const TubeParams& params,
                             const PolytopicConstraints& cons, const StageRefs& refs) {
    const auto t_begin = std::chrono::steady_clock::now();
    const int n = rom.n;
    const int m = static_cast<int>(rom.B_r.cols());
    const int N = cfg.N;
    require(static_cast<int>(refs.z_ref.size()) == N && refs.terminal != nullptr,
            "solve_ocp: stage references incomplete");

    Iterate iterate;
    if (warm_start) {
        iterate = *warm_start;
    } else {
        iterate.z = x_r.replicate(1, N + 1);
        iterate.u.resize(m, N);
        for (int k = 0; k < N; ++k) {
            iterate.u.col(k) = refs.u_ref[k].cwiseMax(cfg.u_lo).cwiseMin(cfg.u_hi);
        }
    }

    OcpSolution sol;
    double rho = cfg.trust_region_init * rom.domain_radius;
    double residual = detail::dynamics_residual(maps, iterate);
    bool converged = false;
    bool infeasible = false;

    // Exact acceptance test for a candidate solution: valid re-propagated
    // tubes and tightened constraints for rn-rompc, dynamics always.
    auto exact_ok = [&](const Iterate& it, double resid) {
        if (resid > 1e-6) return false;
        if (cfg.scheme != Scheme::RnRompc) return true;
        Vector s_traj, d_traj;
        detail::repropagate_tubes(maps, rom, it, x_r, s0, s_traj, d_traj);
        for (int k = 0; k <= N; ++k) {
            if (max_tightened_value(cons, rom, it.z.col(k), d_traj[k], s_traj[k]) > 1e-8) {
                return false;
            }
        }
        return true;
    };

    int iter = 0;
    while (iter < cfg.max_scp_iter) {
        ++iter;
        sol.scp_iters = iter;
        const Subproblem sp =
            build_subproblem(maps, iterate, x_r, s0, cfg, rom, params, cons, refs, rho);
        const QpResult qp = solve_convex_subproblem(sp);
        if (qp.status != QpStatus::Optimal) {
            rho *= 0.5;
            if (rho < cfg.trust_region_min) {
                infeasible = true;
                break;
            }
            continue;
        }
        const Iterate candidate = decode_iterate(sp, qp.x);
        const double cand_residual = detail::dynamics_residual(maps, candidate);
        const double change =
            std::max((candidate.z - iterate.z).cwiseAbs().maxCoeff(),
                     (candidate.u - iterate.u).cwiseAbs().maxCoeff() / sp.u_scale);
        if (cand_residual <= residual + 1e-12) {
            iterate = candidate;
            residual = cand_residual;
            if (cand_residual < 1e-12 || change <= cfg.scp_tol) {
                if (exact_ok(iterate, residual)) {
                    converged = true;
                    break;
                }
                // Linearization is still cheating; tighten its region.
                rho *= 0.5;
                if (rho < cfg.trust_region_min) break;
            }
        } else {
            rho *= 0.5;
            if (rho < cfg.trust_region_min) break;  // keep the best accepted iterate
        }
    }

    sol.u_traj = iterate.u;
    sol.z_traj = iterate.z;
    sol.dyn_residual = residual;
    if (cfg.scheme == Scheme::RnRompc) {
        detail::repropagate_tubes(maps, rom, iterate, x_r, s0, sol.s_traj, sol.delta_traj);
        double worst = -std::numeric_limits<double>::infinity();
        for (int k = 0; k <= N; ++k) {
            worst = std::max(worst, max_tightened_value(cons, rom, iterate.z.col(k),
                                                        sol.delta_traj[k], sol.s_traj[k]));
        }
        sol.max_tightened = worst;
    } else {
        sol.s_traj = Vector::Zero(N + 1);
        sol.delta_traj = Vector::Zero(N + 1);
        Vector g_eff = cons.g;
        if (cfg.scheme == Scheme::BufferSoft && cfg.buffer.size() == cons.rows()) {
            g_eff -= cfg.buffer;
        }
        double worst = -std::numeric_limits<double>::infinity();
        for (int k = 0; k <= N; ++k) {
            const Vector y = rom.C * lift(rom, iterate.z.col(k));
            worst = std::max(worst, (cons.G * y - g_eff).maxCoeff());
        }
        sol.max_slack = std::max(worst, 0.0);
    }

    double cost = 0.0;
    for (int k = 0; k < N; ++k) {
        const Vector dz = iterate.z.col(k) - refs.z_ref[k];
        const Vector du = iterate.u.col(k) - refs.u_ref[k];
        cost += cfg.dt * (dz.dot(cfg.Q * dz) + du.dot(cfg.R * du));
    }
    sol.cost = cost;

    if (infeasible) {
        sol.status = OcpStatus::Infeasible;
    } else {
        sol.status = converged ? OcpStatus::Optimal : OcpStatus::MaxIterations;
    }
    sol.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    return sol;
}

}  // namespace rompc
