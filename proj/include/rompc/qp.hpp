#pragma once

#include "rompc/core.hpp"

#include <limits>

namespace rompc {

/// Dense strictly convex quadratic program
///   min 1/2 x^T H x + f^T x   s.t.  Ae x = be,  Ai x <= bi.
struct QpProblem {
    Matrix H;
    Vector f;
    Matrix Ae;  // may have zero rows
    Vector be;
    Matrix Ai;  // may have zero rows
    Vector bi;

    int vars() const { return static_cast<int>(f.size()); }

    void validate() const {
        const int n = vars();
        require(H.rows() == n && H.cols() == n, "QpProblem: H has wrong shape");
        require(Ae.rows() == be.size() && (Ae.rows() == 0 || Ae.cols() == n),
                "QpProblem: equality block has wrong shape");
        require(Ai.rows() == bi.size() && (Ai.rows() == 0 || Ai.cols() == n),
                "QpProblem: inequality block has wrong shape");
    }
};

enum class QpStatus { Optimal, Infeasible, NotPositiveDefinite, MaxIterations };

struct QpResult {
    QpStatus status = QpStatus::MaxIterations;
    Vector x;
    Vector eq_multipliers;    // nu, sign free
    Vector ineq_multipliers;  // lambda >= 0
    double objective = 0.0;
    int iterations = 0;
    double stationarity = 0.0;     // ||Hx + f + Ae^T nu + Ai^T lambda||_inf
    double primal_residual = 0.0;  // max constraint violation
    double duality_gap = 0.0;      // |complementarity residual|
};

/// Dual active-set QP solver (Goldfarb-Idnani style): starts from the
/// unconstrained minimum, adds most-violated constraints with full or
/// partial dual steps. Equality constraints are added first and never drop.
/// Deterministic; solves to machine precision up to conditioning.
class QpSolver {
public:
    explicit QpSolver(double feas_tol = 1e-10) : feas_tol_(feas_tol) {}

    QpResult solve(const QpProblem& qp) const {
        qp.validate();
        const int n = qp.vars();
        const int me = static_cast<int>(qp.be.size());
        const int mi = static_cast<int>(qp.bi.size());

        QpResult res;
        Eigen::LLT<Matrix> llt(qp.H);
        if (llt.info() != Eigen::Success) {
            res.status = QpStatus::NotPositiveDefinite;
            return res;
        }
        // J = L^{-T}, so H^{-1} = J J^T.
        Matrix J = Matrix::Identity(n, n);
        llt.matrixU().solveInPlace(J);

        Vector x = -llt.solve(qp.f);

        // Active set: normals of constraints in n^T x >= b form.
        // Equalities use normal ae_k; inequalities use -ai_k.
        std::vector<int> active;       // original index; equalities are 0..me-1, ineqs me+k
        Vector u = Vector::Zero(0);    // multipliers of the active set
        Matrix N(n, 0);

        Matrix Qfact;      // from QR of J^T N
        Matrix Rfact;
        auto refactor = [&]() {
            const int q = static_cast<int>(active.size());
            if (q == 0) {
                Qfact = Matrix::Identity(n, n);
                Rfact = Matrix::Zero(0, 0);
                return;
            }
            Eigen::HouseholderQR<Matrix> qr(J.transpose() * N);
            Qfact = qr.householderQ();
            Rfact = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
        };
        refactor();

        auto step_dirs = [&](const Vector& np, Vector& z, Vector& r) {
            const int q = static_cast<int>(active.size());
            const Vector d = Qfact.transpose() * (J.transpose() * np);
            Vector d2 = Vector::Zero(n);
            d2.tail(n - q) = d.tail(n - q);
            z = J * (Qfact * d2);
            if (q > 0) {
                r = Rfact.topLeftCorner(q, q)
                        .triangularView<Eigen::Upper>()
                        .solve(d.head(q));
            } else {
                r = Vector::Zero(0);
            }
        };

        auto add_active = [&](int idx, const Vector& np, double mult_seed) {
            const int q = static_cast<int>(active.size());
            active.push_back(idx);
            Matrix N2(n, q + 1);
            if (q > 0) N2.leftCols(q) = N;
            N2.col(q) = np;
            N = std::move(N2);
            Vector u2(q + 1);
            if (q > 0) u2.head(q) = u;
            u2[q] = mult_seed;
            u = std::move(u2);
            refactor();
        };

        auto drop_active = [&](int pos) {
            const int q = static_cast<int>(active.size());
            for (int k = pos; k + 1 < q; ++k) {
                active[k] = active[k + 1];
                N.col(k) = N.col(k + 1);
                u[k] = u[k + 1];
            }
            active.pop_back();
            N.conservativeResize(n, q - 1);
            u.conservativeResize(q - 1);
            refactor();
        };

        int iterations = 0;
        const int max_iter = 50 * (me + mi + 10);

        // Phase 1: install equality constraints.
        for (int k = 0; k < me; ++k) {
            const Vector np = qp.Ae.row(k).transpose();
            Vector z, r;
            step_dirs(np, z, r);
            const double znp = z.dot(np);
            const double resid = qp.be[k] - np.dot(x);
            if (std::abs(znp) < 1e-13 * std::max(1.0, np.squaredNorm())) {
                if (std::abs(resid) <= 1e-9 * std::max(1.0, std::abs(qp.be[k]))) {
                    continue;  // redundant equality
                }
                res.status = QpStatus::Infeasible;
                res.iterations = iterations;
                return res;
            }
            const double t = resid / znp;
            x += t * z;
            if (u.size() > 0) u -= t * r;
            add_active(k, np, t);
            ++iterations;
        }

        // Phase 2: dual active-set iterations over inequalities.
        while (iterations++ < max_iter) {
            // Most violated inequality.
            int chosen = -1;
            double worst = -feas_tol_ * 10.0;
            for (int k = 0; k < mi; ++k) {
                bool is_active = false;
                for (int a : active) {
                    if (a == me + k) {
                        is_active = true;
                        break;
                    }
                }
                if (is_active) continue;
                const double slack = qp.bi[k] - qp.Ai.row(k).dot(x);  // >= 0 feasible
                const double scaled = slack / std::max(1.0, qp.Ai.row(k).norm());
                if (scaled < worst) {
                    worst = scaled;
                    chosen = k;
                }
            }
            if (chosen < 0) {
                finalize(qp, x, active, u, me, res);
                res.status = QpStatus::Optimal;
                res.iterations = iterations;
                return res;
            }

            const Vector np = -qp.Ai.row(chosen).transpose();  // >= form normal
            const double b_chosen = -qp.bi[chosen];
            double u_plus = 0.0;

            while (true) {
                Vector z, r;
                step_dirs(np, z, r);
                const double znp = z.dot(np);

                // Dual blocking step over active inequalities with r > 0.
                double t1 = std::numeric_limits<double>::infinity();
                int block = -1;
                for (int k = 0; k < static_cast<int>(active.size()); ++k) {
                    if (active[k] < me) continue;  // equalities never drop
                    if (r[k] > 1e-13 && u[k] / r[k] < t1) {
                        t1 = u[k] / r[k];
                        block = k;
                    }
                }
                const bool primal_ok = znp > 1e-13 * np.squaredNorm();
                const double t2 = primal_ok
                                      ? (b_chosen - np.dot(x)) / znp
                                      : std::numeric_limits<double>::infinity();
                const double t = std::min(t1, t2);
                if (!std::isfinite(t)) {
                    res.status = QpStatus::Infeasible;
                    res.iterations = iterations;
                    return res;
                }
                if (u.size() > 0) u -= t * r;
                u_plus += t;
                if (primal_ok) x += t * z;
                if (t == t2 && primal_ok) {
                    add_active(me + chosen, np, u_plus);
                    break;
                }
                drop_active(block);
                if (++iterations >= max_iter) break;
            }
        }
        res.status = QpStatus::MaxIterations;
        res.iterations = iterations;
        finalize(qp, x, active, u, me, res);
        return res;
    }

private:
    static void finalize(const QpProblem& qp, const Vector& x, const std::vector<int>& active,
                         const Vector& u, int me, QpResult& res) {
        const int mi = static_cast<int>(qp.bi.size());
        res.x = x;
        res.eq_multipliers = Vector::Zero(me);
        res.ineq_multipliers = Vector::Zero(mi);
        for (int k = 0; k < static_cast<int>(active.size()); ++k) {
            if (active[k] < me) {
                // Stationarity: Hx + f = sum u_k n_k with n_k = ae_k here,
                // so nu = -u in Hx + f + Ae^T nu + Ai^T lambda = 0.
                res.eq_multipliers[active[k]] = -u[k];
            } else {
                res.ineq_multipliers[active[k] - me] = u[k];
            }
        }
        res.objective = 0.5 * x.dot(qp.H * x) + qp.f.dot(x);

        Vector grad = qp.H * x + qp.f;
        if (me > 0) grad += qp.Ae.transpose() * res.eq_multipliers;
        if (mi > 0) grad += qp.Ai.transpose() * res.ineq_multipliers;
        res.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;

        double viol = 0.0;
        if (me > 0) viol = (qp.Ae * x - qp.be).cwiseAbs().maxCoeff();
        if (mi > 0) viol = std::max(viol, (qp.Ai * x - qp.bi).maxCoeff());
        res.primal_residual = std::max(viol, 0.0);

        double comp = 0.0;
        for (int k = 0; k < mi; ++k) {
            comp += std::abs(res.ineq_multipliers[k] * (qp.Ai.row(k).dot(x) - qp.bi[k]));
        }
        res.duality_gap = comp;
    }

    double feas_tol_;
};

}  // namespace rompc
