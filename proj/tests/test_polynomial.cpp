#include <catch2/catch_amalgamated.hpp>

#include <rompc/polynomial.hpp>

#include "oracles.hpp"

using namespace rompc;

TEST_CASE("monomial basis enumerates the full graded-lex set") {
    MonomialBasis basis(3, 2, 3);
    // C(3+1,2) = 6 quadratic + C(3+2,3) = 10 cubic monomials.
    REQUIRE(basis.size() == 16);
    REQUIRE(basis.exponent(0) == std::vector<int>{2, 0, 0});
    REQUIRE(basis.exponent(1) == std::vector<int>{1, 1, 0});
    REQUIRE(basis.exponent(5) == std::vector<int>{0, 0, 2});
    REQUIRE(basis.exponent(6) == std::vector<int>{3, 0, 0});
    REQUIRE(basis.exponent(15) == std::vector<int>{0, 0, 3});

    for (int k = 0; k < basis.size(); ++k) {
        int total = 0;
        for (int e : basis.exponent(k)) total += e;
        REQUIRE(total >= 2);
        REQUIRE(total <= 3);
    }
}

TEST_CASE("basis rejects linear or constant degree ranges") {
    REQUIRE_THROWS_AS(MonomialBasis(2, 1, 3), std::invalid_argument);
    REQUIRE_THROWS_AS(MonomialBasis(2, 3, 2), std::invalid_argument);
}

TEST_CASE("polynomial map evaluates monomials exactly") {
    PolynomialMap p(2, 1, 2, 3);
    // p(x) = 2 x1^2 - x1 x2 + 0.5 x2^3
    const auto& basis = p.basis();
    for (int k = 0; k < basis.size(); ++k) {
        if (basis.exponent(k) == std::vector<int>{2, 0}) p.coefficients()(0, k) = 2.0;
        if (basis.exponent(k) == std::vector<int>{1, 1}) p.coefficients()(0, k) = -1.0;
        if (basis.exponent(k) == std::vector<int>{0, 3}) p.coefficients()(0, k) = 0.5;
    }
    Vector x(2);
    x << 1.5, -2.0;
    const double expected = 2.0 * 2.25 - 1.5 * (-2.0) + 0.5 * (-8.0);
    REQUIRE(p.eval(x)[0] == Catch::Approx(expected).epsilon(1e-14));
}

TEST_CASE("zero value and zero jacobian at the origin are structural") {
    auto rng = make_rng(7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    PolynomialMap p(4, 3, 2, 4);
    for (int i = 0; i < p.output_dim(); ++i)
        for (int k = 0; k < p.basis().size(); ++k) p.coefficients()(i, k) = unit(rng);

    const Vector zero = Vector::Zero(4);
    REQUIRE(p.eval(zero).norm() == 0.0);
    REQUIRE(p.jacobian(zero).norm() == 0.0);
}

TEST_CASE("jacobian matches finite differences on random maps") {
    auto rng = make_rng(11);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    PolynomialMap p(3, 2, 2, 3);
    for (int i = 0; i < p.output_dim(); ++i)
        for (int k = 0; k < p.basis().size(); ++k) p.coefficients()(i, k) = unit(rng);

    for (int trial = 0; trial < 50; ++trial) {
        const Vector x = ball_sample(rng, 3, 1.5);
        const Matrix J = p.jacobian(x);
        const Matrix J_fd = oracles::finite_difference_jacobian(
            [&](const Vector& xx) { return p.eval(xx); }, x);
        REQUIRE((J - J_fd).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("max jacobian norm is an upper bound over the sampled points") {
    auto rng = make_rng(3);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    PolynomialMap p(2, 2, 2, 2);
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < p.basis().size(); ++k) p.coefficients()(i, k) = unit(rng);

    std::vector<Vector> samples;
    for (int i = 0; i < 200; ++i) samples.push_back(ball_sample(rng, 2, 1.0));
    const double bound = p.max_jacobian_norm(samples);
    for (const auto& x : samples) {
        Eigen::JacobiSVD<Matrix> svd(p.jacobian(x));
        REQUIRE(svd.singularValues()[0] <= bound + 1e-12);
    }
}
