#pragma once

#include "rompc/ocp.hpp"

namespace rompc {

/// Receding-horizon state: the off-manifold bound carried across steps via
/// s0 = s*(dt), the shifted warm start (the recursive-feasibility candidate)
/// and bookkeeping for fallback events.
struct ControllerState {
    double s0 = 0.0;
    bool has_warm = false;
    Iterate warm;
    int k = 0;
    int fallback_count = 0;
};

struct StepResult {
    Vector applied;  // input held on [t, t + dt)
    OcpSolution sol;
    bool used_fallback = false;
};

namespace detail {

inline Iterate shift_iterate(const DiscreteMaps& maps, const Iterate& it,
                             const Vector& u_tail) {
    const int N = static_cast<int>(it.u.cols());
    Iterate out;
    out.z.resize(it.z.rows(), N + 1);
    out.u.resize(it.u.rows(), N);
    out.z.leftCols(N) = it.z.rightCols(N);
    out.u.leftCols(N - 1) = it.u.rightCols(N - 1);
    out.u.col(N - 1) = u_tail;
    out.z.col(N) = maps.z_step(out.z.col(N - 1), u_tail);
    return out;
}

}  // namespace detail

/// One step of the online loop: solve the OCP at the measured reduced state,
/// apply u*(0), carry s0 = s*(dt) and shift the solution into the next warm
/// start. If the solver fails and a previous solution exists, the shifted
/// candidate is applied instead and the event is counted.
inline StepResult mpc_step(ControllerState& state, const Vector& x_r, double t_now,
                           const OcpConfig& cfg, const DiscreteMaps& maps, const SsmRom& rom,
                           const TubeParams& params, const PolytopicConstraints& cons,
                           const ReferenceSchedule& schedule, bool inject_fault = false) {
    StageRefs refs;
    refs.z_ref.reserve(cfg.N);
    refs.u_ref.reserve(cfg.N);
    for (int k = 0; k < cfg.N; ++k) {
        const auto& seg = schedule.at(t_now + k * cfg.dt);
        refs.z_ref.push_back(seg.z_ref);
        refs.u_ref.push_back(seg.u_ref);
    }
    const auto& terminal_seg = schedule.at(t_now + cfg.N * cfg.dt);
    refs.terminal = &terminal_seg.terminal;

    StepResult step;
    step.sol = solve_ocp(x_r, state.s0, state.has_warm ? &state.warm : nullptr, cfg, maps,
                         rom, params, cons, refs);
    const bool solver_ok = step.sol.status == OcpStatus::Optimal && !inject_fault;

    Iterate applied_plan;
    if (solver_ok) {
        applied_plan.z = step.sol.z_traj;
        applied_plan.u = step.sol.u_traj;
    } else if (state.has_warm) {
        // Shifted candidate from the previous solution; feasible by the
        // recursive-feasibility argument when the reference segment is
        // unchanged.
        applied_plan = state.warm;
        step.used_fallback = true;
        ++state.fallback_count;
    } else {
        throw std::runtime_error(
            "mpc_step: OCP infeasible at the first step and no previous solution");
    }

    step.applied = applied_plan.u.col(0);

    // Tube carry-over with the exact input norms of the applied input.
    state.s0 = propagate_interval(params, TubeState{state.s0, 0.0},
                                  input_norms(rom, step.applied), cfg.dt)
                   .s;
    state.warm = detail::shift_iterate(maps, applied_plan, terminal_seg.terminal.u_bar);
    state.has_warm = true;
    ++state.k;

    if (step.used_fallback) {
        step.sol.z_traj = applied_plan.z;
        step.sol.u_traj = applied_plan.u;
    }
    return step;
}

}  // namespace rompc
