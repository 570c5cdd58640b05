#include <catch2/catch_amalgamated.hpp>

#include <rompc/qp.hpp>

#include "oracles.hpp"

using namespace rompc;

TEST_CASE("one-variable QP with an active bound") {
    // min (u-1)^2 s.t. u <= 0  ->  u = 0
    QpProblem qp;
    qp.H = 2.0 * Matrix::Identity(1, 1);
    qp.f = Vector::Constant(1, -2.0);
    qp.Ae = Matrix(0, 1);
    qp.be = Vector(0);
    qp.Ai = Matrix::Identity(1, 1);
    qp.bi = Vector::Zero(1);

    const auto res = QpSolver().solve(qp);
    REQUIRE(res.status == QpStatus::Optimal);
    REQUIRE(res.x[0] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(res.ineq_multipliers[0] == Catch::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("unconstrained and equality-constrained QPs match closed forms") {
    auto rng = make_rng(21);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 8;
        Matrix M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) M(i, j) = unit(rng);
        QpProblem qp;
        qp.H = M.transpose() * M + Matrix::Identity(n, n);
        qp.f = Vector::NullaryExpr(n, [&](int) { return unit(rng); });
        qp.Ae = Matrix(2, n);
        for (int j = 0; j < n; ++j) {
            qp.Ae(0, j) = unit(rng);
            qp.Ae(1, j) = unit(rng);
        }
        qp.be = Vector::NullaryExpr(2, [&](int) { return unit(rng); });
        qp.Ai = Matrix(0, n);
        qp.bi = Vector(0);

        // KKT oracle: [H Ae^T; Ae 0][x; nu] = [-f; be].
        Matrix K = Matrix::Zero(n + 2, n + 2);
        K.topLeftCorner(n, n) = qp.H;
        K.topRightCorner(n, 2) = qp.Ae.transpose();
        K.bottomLeftCorner(2, n) = qp.Ae;
        Vector rhs(n + 2);
        rhs.head(n) = -qp.f;
        rhs.tail(2) = qp.be;
        const Vector sol = K.fullPivLu().solve(rhs);

        const auto res = QpSolver().solve(qp);
        REQUIRE(res.status == QpStatus::Optimal);
        REQUIRE((res.x - sol.head(n)).cwiseAbs().maxCoeff() < 1e-9);
        REQUIRE((res.eq_multipliers - sol.tail(2)).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("random feasible QPs against the constructed-optimum oracle") {
    auto rng = make_rng(101);
    std::uniform_int_distribution<int> nd(5, 50);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = nd(rng);
        const int me = std::min(n / 4, 3);
        const int mi = n + 10;
        const auto built = oracles::build_random_feasible_qp(rng, n, me, mi);
        const auto res = QpSolver().solve(built.qp);
        REQUIRE(res.status == QpStatus::Optimal);
        REQUIRE((res.x - built.x_star).cwiseAbs().maxCoeff() < 1e-6);
        REQUIRE(res.stationarity < 1e-7);
        REQUIRE(res.primal_residual < 1e-7);
        REQUIRE(res.duality_gap < 1e-7);
        REQUIRE(res.ineq_multipliers.minCoeff() >= -1e-10);
    }
}

TEST_CASE("box QPs match a coordinate-descent oracle") {
    auto rng = make_rng(55);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 12;
        Matrix M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) M(i, j) = unit(rng);
        const Matrix H = M.transpose() * M + 0.5 * Matrix::Identity(n, n);
        const Vector f = Vector::NullaryExpr(n, [&](int) { return 2.0 * unit(rng); });
        const Vector lo = Vector::Constant(n, -0.4);
        const Vector hi = Vector::Constant(n, 0.4);

        QpProblem qp;
        qp.H = H;
        qp.f = f;
        qp.Ae = Matrix(0, n);
        qp.be = Vector(0);
        qp.Ai = Matrix(2 * n, n);
        qp.Ai << Matrix::Identity(n, n), -Matrix::Identity(n, n);
        qp.bi = Vector(2 * n);
        qp.bi << hi, -lo;

        const auto res = QpSolver().solve(qp);
        REQUIRE(res.status == QpStatus::Optimal);
        const Vector oracle = oracles::box_qp_coordinate_descent(H, f, lo, hi);
        REQUIRE((res.x - oracle).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("infeasible constraint sets are detected") {
    QpProblem qp;
    qp.H = Matrix::Identity(1, 1);
    qp.f = Vector::Zero(1);
    qp.Ae = Matrix(0, 1);
    qp.be = Vector(0);
    qp.Ai = Matrix(2, 1);
    qp.Ai << 1.0, -1.0;  // x <= -1 and -x <= 0 (x >= 0)
    qp.bi = Vector(2);
    qp.bi << -1.0, 0.0;
    const auto res = QpSolver().solve(qp);
    REQUIRE(res.status == QpStatus::Infeasible);
}

TEST_CASE("contradictory equalities are detected") {
    QpProblem qp;
    qp.H = Matrix::Identity(2, 2);
    qp.f = Vector::Zero(2);
    qp.Ae = Matrix(2, 2);
    qp.Ae << 1.0, 1.0, 1.0, 1.0;
    qp.be = Vector(2);
    qp.be << 1.0, 2.0;
    qp.Ai = Matrix(0, 2);
    qp.bi = Vector(0);
    REQUIRE(QpSolver().solve(qp).status == QpStatus::Infeasible);
}

TEST_CASE("indefinite objectives are rejected") {
    QpProblem qp;
    qp.H = -Matrix::Identity(2, 2);
    qp.f = Vector::Zero(2);
    qp.Ae = Matrix(0, 2);
    qp.be = Vector(0);
    qp.Ai = Matrix(0, 2);
    qp.bi = Vector(0);
    REQUIRE(QpSolver().solve(qp).status == QpStatus::NotPositiveDefinite);
}

TEST_CASE("solver is deterministic") {
    auto rng = make_rng(404);
    const auto built = oracles::build_random_feasible_qp(rng, 30, 2, 45);
    const auto r1 = QpSolver().solve(built.qp);
    const auto r2 = QpSolver().solve(built.qp);
    REQUIRE(r1.status == QpStatus::Optimal);
    REQUIRE((r1.x - r2.x).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(r1.iterations == r2.iterations);
}
