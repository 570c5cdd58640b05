#pragma once

#include "rompc/ssm.hpp"

namespace rompc {

/// Autonomous decay trajectories (u = 0, d = 0) sampled at a fixed period.
struct TrainingData {
    std::vector<Trajectory> trajectories;
    double dt = 0.0;

    int state_dim() const {
        return trajectories.empty() ? 0 : static_cast<int>(trajectories[0].states.rows());
    }
    int total_samples() const {
        int total = 0;
        for (const auto& tr : trajectories) total += tr.samples();
        return total;
    }
};

/// Decay data generator. Starting on the manifold gives noiseless graph
/// regression targets; burn_in drops the fast transient otherwise.
inline TrainingData generate_decay_data(const FullOrderModel& model, const SsmRom* start_on,
                                        int n_traj, double x_r_radius, double t_final,
                                        double dt_sample, std::uint64_t seed,
                                        double burn_in = 0.0) {
    TrainingData data;
    data.dt = dt_sample;
    auto rng = make_rng(seed);
    const int drop = static_cast<int>(std::round(burn_in / dt_sample));
    for (int i = 0; i < n_traj; ++i) {
        Vector x0;
        if (start_on) {
            x0 = lift(*start_on, ball_sample(rng, start_on->n, x_r_radius));
        } else {
            x0 = ball_sample(rng, model.n_f, x_r_radius);
        }
        const int periods = std::max(1, static_cast<int>(std::ceil(t_final / 0.1)));
        const auto u = PiecewiseConstantSignal::zero(0.1, model.m, periods);
        const auto d = PiecewiseConstantSignal::zero(0.1, model.n_f, periods);
        Trajectory traj = simulate(model, x0, u, d, t_final, dt_sample);
        if (drop > 0 && drop < traj.samples() - 2) {
            Trajectory cut;
            cut.times.assign(traj.times.begin() + drop, traj.times.end());
            cut.states = traj.states.rightCols(traj.samples() - drop);
            traj = std::move(cut);
        }
        data.trajectories.push_back(std::move(traj));
    }
    return data;
}

struct FitGraphOptions {
    bool use_model_linear_part = true;  // A_r from the blocks; else regressed
    int constants_samples = 2000;
    std::uint64_t constants_seed = 12345;
    int jobs = 0;
};

namespace detail {

inline void check_regression_rank(const Eigen::ColPivHouseholderQR<Matrix>& qr,
                                  const MonomialBasis& basis) {
    if (qr.rank() >= basis.size()) return;
    // Name the first total-degree block whose columns are not independent.
    std::vector<int> degree_of(basis.size());
    for (int k = 0; k < basis.size(); ++k) {
        int d = 0;
        for (int e : basis.exponent(k)) d += e;
        degree_of[k] = d;
    }
    std::ostringstream oss;
    oss << "fit_graph_rom: rank-deficient regression (rank " << qr.rank() << " of "
        << basis.size() << " monomials); deficient at total degree "
        << degree_of[std::min<int>(qr.rank(), basis.size() - 1)]
        << "; provide richer decay data";
    throw std::runtime_error(oss.str());
}

}  // namespace detail

/// Graph-style regression of the reduced-order model from decaying data:
/// reduced coordinates are the leading n modal coordinates, w_nl is fitted
/// on the normal components only (so V_r^T w_nl = 0 holds by construction)
/// and r_nl on the finite-difference drift residual.
inline SsmRom fit_graph_rom(const TrainingData& data, int n, std::pair<int, int> degrees,
                            const FullOrderModel& model, const FitGraphOptions& opt = {}) {
    require(!data.trajectories.empty() && data.dt > 0.0, "fit_graph_rom: no training data");
    const int n_f = data.state_dim();
    require(n >= 1 && n < n_f, "fit_graph_rom: need 1 <= n < n_f");
    require(n_f == model.n_f, "fit_graph_rom: data dimension does not match the model");

    SsmRom rom;
    rom.n = n;
    rom.n_f = n_f;
    rom.m = model.m;
    rom.n_y = model.n_y;
    rom.B_r = model.B.topRows(n);
    rom.B_n = model.B.bottomRows(n_f - n);
    rom.C = model.C;
    rom.domain_radius = model.domain_radius;

    const MonomialBasis basis(n, degrees.first, degrees.second);
    require(data.total_samples() >= 10 * basis.size(),
            "fit_graph_rom: need at least 10 samples per coefficient");

    // Stacked design matrix on all samples; interior-sample copy for the
    // drift regression with central differences.
    const int total = data.total_samples();
    Matrix phi_all(total, basis.size());
    Matrix xn_all(total, n_f - n);
    int at = 0;
    int interior = 0;
    for (const auto& tr : data.trajectories) {
        for (int k = 0; k < tr.samples(); ++k) {
            const Vector x = tr.state(k);
            phi_all.row(at) = basis.eval(x.head(n)).transpose();
            xn_all.row(at) = x.tail(n_f - n).transpose();
            ++at;
        }
        interior += std::max(0, tr.samples() - 2);
    }

    Eigen::ColPivHouseholderQR<Matrix> qr(phi_all);
    detail::check_regression_rank(qr, basis);
    const Matrix w_coeffs = qr.solve(xn_all).transpose();  // (n_f - n) x n_mono

    rom.w_nl = PolynomialMap(n, n_f, degrees.first, degrees.second);
    rom.w_nl.coefficients().bottomRows(n_f - n) = w_coeffs;

    // Linear part.
    if (opt.use_model_linear_part) {
        std::vector<ModalBlock> reduced;
        int dim_at = 0;
        for (const auto& b : model.blocks) {
            if (dim_at < n) reduced.push_back(b);
            dim_at += b.dim();
        }
        require(total_dim(reduced) == n, "fit_graph_rom: n splits a modal block");
        rom.reduced_blocks = reduced;
        rom.A_r = assemble_A(reduced);
    }

    // Drift regression from central differences.
    Matrix phi_int(interior, basis.size());
    Matrix xr_int(interior, n);
    Matrix dxr_int(interior, n);
    at = 0;
    for (const auto& tr : data.trajectories) {
        for (int k = 1; k + 1 < tr.samples(); ++k) {
            const Vector x = tr.state(k);
            phi_int.row(at) = basis.eval(x.head(n)).transpose();
            xr_int.row(at) = x.head(n).transpose();
            dxr_int.row(at) =
                ((tr.state(k + 1).head(n) - tr.state(k - 1).head(n)) / (2.0 * data.dt))
                    .transpose();
            ++at;
        }
    }

    rom.r_nl = PolynomialMap(n, n, degrees.first, degrees.second);
    if (opt.use_model_linear_part) {
        const Matrix target = dxr_int - xr_int * rom.A_r.transpose();
        Eigen::ColPivHouseholderQR<Matrix> qr_r(phi_int);
        detail::check_regression_rank(qr_r, basis);
        rom.r_nl.set_coefficients(qr_r.solve(target).transpose());
    } else {
        // Joint linear + polynomial regression when the blocks are unknown.
        Matrix design(interior, n + basis.size());
        design.leftCols(n) = xr_int;
        design.rightCols(basis.size()) = phi_int;
        Eigen::ColPivHouseholderQR<Matrix> qr_j(design);
        if (qr_j.rank() < design.cols()) {
            throw std::runtime_error(
                "fit_graph_rom: rank-deficient joint regression of the linear part");
        }
        const Matrix sol = qr_j.solve(dxr_int);  // (n + n_mono) x n
        rom.A_r = sol.topRows(n).transpose();
        rom.r_nl.set_coefficients(sol.bottomRows(basis.size()).transpose());
    }

    rom.validate();
    rom.constants =
        estimate_constants(rom, model, opt.constants_samples, opt.constants_seed, opt.jobs);
    return rom;
}

/// Open-loop prediction check on a held-out trajectory: integrate the fitted
/// reduced dynamics from the projected start and report the normalized RMS
/// error against the projected data.
inline double reduced_prediction_nrmse(const SsmRom& rom, const Trajectory& held_out,
                                       double dt) {
    Vector z = held_out.state(0).head(rom.n);
    double err2 = 0.0, ref2 = 0.0;
    for (int k = 0; k < held_out.samples(); ++k) {
        const Vector x_r = held_out.state(k).head(rom.n);
        err2 += (z - x_r).squaredNorm();
        ref2 += x_r.squaredNorm();
        if (k + 1 < held_out.samples()) {
            z = detail::rk4_step(
                [&](double, const Vector& zs) {
                    return Vector(rom.A_r * zs + rom.r_nl.eval(zs));
                },
                0.0, z, dt);
        }
    }
    return std::sqrt(err2 / std::max(ref2, 1e-30));
}

}  // namespace rompc
