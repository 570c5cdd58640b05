#pragma once

#include "rompc/fom.hpp"

#include <limits>

namespace rompc {

/// Certified constants of the reduced-order model on its operating ball.
/// lambda_* are matrix measures (max eigenvalue of the symmetric part), which
/// coincide with the slowest real parts for real modal blocks.
struct RomConstants {
    double L_fnl = 0.0;
    double L_wnl = 0.0;
    double L_rnl = 0.0;
    double L_Cw = 0.0;
    double lambda_An = -1.0;
    double lambda_Ar = -0.5;

    void validate() const {
        require(L_fnl >= 0.0 && L_wnl >= 0.0 && L_rnl >= 0.0 && L_Cw >= 0.0,
                "RomConstants: Lipschitz constants must be nonnegative");
        require(lambda_An < lambda_Ar && lambda_Ar < 0.0,
                "RomConstants: need lambda_An < lambda_Ar < 0");
    }

    /// Stated bound L_rnl <= L_fnl (1 + L_wnl), up to estimation slack.
    bool lipschitz_bound_consistent(double slack = 1.05) const {
        return L_rnl <= slack * L_fnl * (1.0 + L_wnl) + 1e-12;
    }
};

/// Reduced-order model on the spectral submanifold in graph form:
///   x = V_r x_r + w_nl(x_r),  z_r_dot = A_r z_r + r_nl(z_r) + B_r u.
/// Under modal coordinates V_r selects the leading n states, so projections
/// and lifts are slicing plus the polynomial part.
struct SsmRom {
    int n = 0;
    int n_f = 0;
    int m = 0;
    int n_y = 0;
    Matrix A_r;                             // n x n
    std::vector<ModalBlock> reduced_blocks; // empty for fitted linear parts
    PolynomialMap w_nl;                     // n -> n_f, leading n rows zero
    PolynomialMap r_nl;                     // n -> n
    Matrix B_r;                             // n x m
    Matrix B_n;                             // (n_f - n) x m
    Matrix C;                               // n_y x n_f output map of the plant
    RomConstants constants;
    double domain_radius = 1.0;

    void validate() const {
        require(n >= 1 && n_f > n, "SsmRom: need 1 <= n < n_f");
        require(A_r.rows() == n && A_r.cols() == n, "SsmRom: A_r has wrong shape");
        require(w_nl.input_dim() == n && w_nl.output_dim() == n_f,
                "SsmRom: w_nl has wrong shape");
        require(r_nl.input_dim() == n && r_nl.output_dim() == n, "SsmRom: r_nl has wrong shape");
        require(B_r.rows() == n && B_n.rows() == n_f - n && B_r.cols() == B_n.cols(),
                "SsmRom: input matrices have wrong shape");
        require(C.cols() == n_f, "SsmRom: C has wrong shape");
        // Range of w_nl must stay orthogonal to the reduced basis.
        require(w_nl.coefficients().topRows(n).cwiseAbs().maxCoeff() == 0.0,
                "SsmRom: w_nl must have zero components along the reduced basis");
    }

    double c_norm() const { return C.operatorNorm(); }
};

/// x_r = V_r^T x: the leading n modal coordinates.
inline Vector project(const SsmRom& rom, const Vector& x) {
    require(x.size() == rom.n_f, "project: dimension mismatch");
    return x.head(rom.n);
}

/// x = V_r x_r + w_nl(x_r).
inline Vector lift(const SsmRom& rom, const Vector& x_r) {
    require(x_r.size() == rom.n, "lift: dimension mismatch");
    Vector x = rom.w_nl.eval(x_r);
    x.head(rom.n) += x_r;
    return x;
}

/// Jacobian of the parameterization w at x_r: V_r + w_nl'(x_r), shape n_f x n.
inline Matrix lift_jacobian(const SsmRom& rom, const Vector& x_r) {
    Matrix J = rom.w_nl.jacobian(x_r);
    J.topRows(rom.n) += Matrix::Identity(rom.n, rom.n);
    return J;
}

/// Prediction-model right-hand side A_r z_r + r_nl(z_r) + B_r u.
inline Vector reduced_rhs(const SsmRom& rom, const Vector& z_r, const Vector& u) {
    require(z_r.size() == rom.n, "reduced_rhs: state dimension mismatch");
    require(u.size() == rom.B_r.cols(), "reduced_rhs: input dimension mismatch");
    Vector dz = rom.A_r * z_r + rom.r_nl.eval(z_r);
    dz.noalias() += rom.B_r * u;
    return dz;
}

/// ||x_n - V_n^T w_nl(x_r)||, the distance of x to its on-manifold image.
inline double off_manifold_error(const SsmRom& rom, const Vector& x) {
    require(x.size() == rom.n_f, "off_manifold_error: dimension mismatch");
    const Vector w = rom.w_nl.eval(x.head(rom.n));
    return (x.tail(rom.n_f - rom.n) - w.tail(rom.n_f - rom.n)).norm();
}

/// e(x) = f_nl(x) - f_nl(w(V_r^T x)).
inline Vector residual_e(const SsmRom& rom, const FullOrderModel& model, const Vector& x) {
    require(x.size() == rom.n_f && model.n_f == rom.n_f, "residual_e: dimension mismatch");
    if (!model.f_nl) return Vector::Zero(rom.n_f);
    return model.f_nl->eval(x) - model.f_nl->eval(lift(rom, project(rom, x)));
}

/// Exact input-norm split used by the error dynamics.
struct InputNorms {
    double bn_u = 0.0;  // ||B_n u||
    double br_u = 0.0;  // ||B_r u||
    double u = 0.0;     // ||u||
};

inline InputNorms input_norms(const SsmRom& rom, const Vector& u) {
    return {(rom.B_n * u).norm(), (rom.B_r * u).norm(), u.norm()};
}

/// Columnwise 1-norm over-bounds of the same quantities,
/// ||B v|| <= sum_i ||B e_i|| |v_i|; this is the norm model the convex
/// subproblems enforce, so terminal sets are sized against it.
inline InputNorms input_norm_upper_bounds(const SsmRom& rom, const Vector& u) {
    InputNorms nu;
    for (int i = 0; i < u.size(); ++i) {
        nu.bn_u += rom.B_n.col(i).norm() * std::abs(u[i]);
        nu.br_u += rom.B_r.col(i).norm() * std::abs(u[i]);
        nu.u += std::abs(u[i]);
    }
    return nu;
}

namespace detail {

/// Largest singular value via power iteration on J^T J; deterministic start.
inline double operator_norm_power(const Matrix& J, int max_iter = 80, double tol = 1e-11) {
    const int n = static_cast<int>(J.cols());
    Vector v = Vector::Ones(n);
    for (int i = 0; i < n; ++i) v[i] += 1e-3 * std::sin(static_cast<double>(i + 1));
    v.normalize();
    double sigma2 = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector w = J.transpose() * (J * v);
        const double next = w.norm();
        if (next == 0.0) return 0.0;
        w /= next;
        if (std::abs(next - sigma2) <= tol * std::max(1.0, next) && it > 4) {
            sigma2 = next;
            break;
        }
        sigma2 = next;
        v = w;
    }
    return std::sqrt(sigma2);
}

inline double matrix_measure(const Matrix& A) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()));
    return es.eigenvalues().maxCoeff();
}

}  // namespace detail

/// Sampling-based Lipschitz-constant estimation: maximum Jacobian operator
/// norm over points in the operating ball, inflated by 1.2 for nonlinear
/// terms. lambda_An / lambda_Ar come from the block spectra (matrix measure
/// for fitted dense A_r).
inline RomConstants estimate_constants(const SsmRom& rom, const FullOrderModel& model,
                                       int n_samples, std::uint64_t seed, int jobs = 0) {
    require(n_samples >= 1000, "estimate_constants: need n_samples >= 1000");
    const double inflation = 1.2;

    std::vector<Vector> xr_samples(n_samples);
    std::vector<Vector> x_samples(n_samples);
    {
        auto rng = make_rng(seed);
        for (int i = 0; i < n_samples; ++i) {
            xr_samples[i] = ball_sample(rng, rom.n, rom.domain_radius);
            x_samples[i] = ball_sample(rng, model.n_f, model.domain_radius);
        }
    }

    std::vector<double> lf(n_samples, 0.0), lw(n_samples, 0.0), lr(n_samples, 0.0),
        lcw(n_samples, 0.0);
    parallel_for(n_samples, jobs, [&](int i) {
        if (model.f_nl) lf[i] = detail::operator_norm_power(model.f_nl->jacobian(x_samples[i]));
        const Matrix Jw = rom.w_nl.jacobian(xr_samples[i]);
        Eigen::JacobiSVD<Matrix> svd_w(Jw);
        lw[i] = svd_w.singularValues().size() ? svd_w.singularValues()[0] : 0.0;
        Eigen::JacobiSVD<Matrix> svd_r(rom.r_nl.jacobian(xr_samples[i]));
        lr[i] = svd_r.singularValues().size() ? svd_r.singularValues()[0] : 0.0;
        Matrix Jcw = rom.C.leftCols(rom.n);
        Jcw.noalias() += rom.C * Jw;
        Eigen::JacobiSVD<Matrix> svd_c(Jcw);
        lcw[i] = svd_c.singularValues().size() ? svd_c.singularValues()[0] : 0.0;
    });

    RomConstants k;
    const double max_lf = *std::max_element(lf.begin(), lf.end());
    const double max_lw = *std::max_element(lw.begin(), lw.end());
    const double max_lr = *std::max_element(lr.begin(), lr.end());
    const double max_lcw = *std::max_element(lcw.begin(), lcw.end());
    k.L_fnl = model.f_nl ? inflation * max_lf : 0.0;
    k.L_wnl = rom.w_nl.is_zero() ? 0.0 : inflation * max_lw;
    k.L_rnl = rom.r_nl.is_zero() ? 0.0 : inflation * max_lr;
    k.L_Cw = rom.w_nl.is_zero() ? max_lcw : inflation * max_lcw;

    // Spectral constants: slowest outer mode and slowest reduced mode.
    double lam_an = -std::numeric_limits<double>::infinity();
    int at = 0;
    for (const auto& b : model.blocks) {
        if (at >= rom.n) lam_an = std::max(lam_an, b.decay);
        at += b.dim();
    }
    require(std::isfinite(lam_an), "estimate_constants: model has no outer blocks");
    k.lambda_An = lam_an;
    k.lambda_Ar = detail::matrix_measure(rom.A_r);
    k.validate();
    return k;
}

}  // namespace rompc
