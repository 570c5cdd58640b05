#include <catch2/catch_amalgamated.hpp>

#include <rompc/tube.hpp>
#include <rompc/tube_verify.hpp>

#include <rompc/benchmark.hpp>

#include "oracles.hpp"

using namespace rompc;

namespace {

TubeParams sample_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    TubeParams p;
    p.lambda_An = -0.2 - 25.0 * unit(rng);
    p.lambda_Ar = -0.05 - 2.0 * unit(rng);
    p.L_fnl = 3.0 * unit(rng);
    p.L_wnl = 0.8 * unit(rng);
    p.L_rnl = 0.8 * unit(rng);
    p.d_bar = 0.5 * unit(rng);
    return p;
}

/// Affine extension of the tube field sampled through the public rhs, so the
/// adaptive oracle can take trial steps below zero without tripping state
/// validation. The tube dynamics are affine, so the extension is exact.
struct AffineTubeField {
    Matrix M{2, 2};
    Vector b{2};

    explicit AffineTubeField(const TubeParams& p, const InputNorms& nu) {
        auto at = [&](double s, double d) {
            const auto [ds, dd] = tube_rhs(p, TubeState{s, d}, nu);
            Vector v(2);
            v << ds, dd;
            return v;
        };
        b = at(0.0, 0.0);
        M.col(0) = at(1.0, 0.0) - b;
        M.col(1) = at(0.0, 1.0) - b;
    }

    Vector operator()(const Vector& y) const { return M * y + b; }
};

}  // namespace

TEST_CASE("rhs vanishes at the origin without forcing") {
    TubeParams p;
    p.lambda_An = -2.0;
    p.lambda_Ar = -0.5;
    p.d_bar = 0.0;
    const auto [ds, dd] = tube_rhs(p, {0.0, 0.0}, {});
    REQUIRE(ds == 0.0);
    REQUIRE(dd == 0.0);
}

TEST_CASE("steady state solves the scalar balance (set s_dot = 0)") {
    TubeParams p;
    p.lambda_An = -10.0;
    p.lambda_Ar = -1.0;
    p.L_fnl = 1.5;
    p.L_wnl = 0.4;
    p.L_rnl = 0.3;
    p.d_bar = 0.2;
    REQUIRE(p.stable());
    const auto [s_star, d_star] = p.steady_state({});
    // By hand: s* = -(1 + L_wnl) d_bar / lambda_s.
    const double lambda_s = p.lambda_An + (1.0 + p.L_wnl) * p.L_fnl;
    REQUIRE(s_star == Catch::Approx(-(1.0 + p.L_wnl) * p.d_bar / lambda_s).epsilon(1e-14));
    const auto [ds, dd] = tube_rhs(p, {s_star, d_star}, {});
    REQUIRE(std::abs(ds) < 1e-14);
    REQUIRE(std::abs(dd) < 1e-14);
}

TEST_CASE("reported data-driven constants give stable dynamics") {
    // L_bar = 0.001, B_bar = 0.012, d_hat = 3 with the slow outer spectrum
    // dominating: s_dot contracts and settles to a positive steady state.
    const auto p = TubeParams::data_driven(-20.0, -1.0, 120.897, 2.019, 0.001, 0.012, 3.0, 3.0);
    REQUIRE(p.lambda_s() < 0.0);
    // delta dynamics need lambda_Ar + L_rnl < 0; with these constants the
    // reported pair is only meaningful on a faster reduced spectrum.
    const auto p2 = TubeParams::data_driven(-20.0, -2.5, 120.897, 2.019, 0.001, 0.012, 3.0, 3.0);
    REQUIRE(p2.stable());
    const auto [s_star, d_star] = p2.steady_state({0.0, 0.0, 0.0});
    REQUIRE(s_star > 0.0);
    REQUIRE(d_star > 0.0);
}

TEST_CASE("exact propagation matches an adaptive ODE oracle") {
    auto rng = make_rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        auto p = sample_params(rng);
        if (trial % 4 == 0) p.L_rnl = -p.lambda_Ar;          // lambda_delta == 0
        if (trial % 7 == 0) p.L_fnl = -p.lambda_An / (1.0 + p.L_wnl);  // lambda_s == 0
        if (trial % 5 == 0 && p.lambda_Ar > p.lambda_An) {
            // exactly degenerate lambda_s == lambda_delta
            p.L_rnl = 0.0;
            p.L_fnl = (p.lambda_Ar - p.lambda_An) / (1.0 + p.L_wnl);
        }
        const InputNorms nu{0.3 * unit(rng), 0.2 * unit(rng), 0.4 * unit(rng)};
        const TubeState x0{0.5 * unit(rng), 0.5 * unit(rng)};
        const double dt = 0.01 + 2.0 * unit(rng);

        const auto exact = propagate_interval(p, x0, nu, dt);
        Vector y0(2);
        y0 << x0.s, x0.delta;
        const AffineTubeField field(p, nu);
        const Vector ref = oracles::rk45_integrate(
            [&](double, const Vector& y) { return field(y); }, y0, 0.0, dt);
        const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
        REQUIRE(std::abs(exact.s - ref[0]) / scale < 1e-10);
        REQUIRE(std::abs(exact.delta - ref[1]) / scale < 1e-10);
    }
}

TEST_CASE("flow property: two half steps equal one full step") {
    auto rng = make_rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const auto p = sample_params(rng);
        const InputNorms nu{0.2 * unit(rng), 0.1 * unit(rng), 0.0};
        const TubeState x0{unit(rng), unit(rng)};
        const double dt = 0.005 + unit(rng);

        const auto full = propagate_interval(p, x0, nu, dt);
        const auto half = propagate_interval(p, propagate_interval(p, x0, nu, dt / 2), nu,
                                             dt / 2);
        const double scale = std::max({1.0, full.s, full.delta});
        REQUIRE(std::abs(full.s - half.s) / scale < 1e-12);
        REQUIRE(std::abs(full.delta - half.delta) / scale < 1e-12);
    }
}

TEST_CASE("monotonicity in initial data, disturbance and input norms") {
    auto rng = make_rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        auto p = sample_params(rng);
        const InputNorms nu{0.2 * unit(rng), 0.1 * unit(rng), 0.0};
        const TubeState x0{unit(rng), unit(rng)};
        const double dt = 0.01 + unit(rng);
        const auto base = propagate_interval(p, x0, nu, dt);

        const auto bigger_s0 = propagate_interval(p, {x0.s + 0.1, x0.delta}, nu, dt);
        REQUIRE(bigger_s0.s >= base.s - 1e-14);
        REQUIRE(bigger_s0.delta >= base.delta - 1e-14);

        const auto bigger_d0 = propagate_interval(p, {x0.s, x0.delta + 0.1}, nu, dt);
        REQUIRE(bigger_d0.delta >= base.delta - 1e-14);

        const InputNorms nu_big{nu.bn_u + 0.2, nu.br_u + 0.1, nu.u};
        const auto bigger_nu = propagate_interval(p, x0, nu_big, dt);
        REQUIRE(bigger_nu.s >= base.s - 1e-14);
        REQUIRE(bigger_nu.delta >= base.delta - 1e-14);

        auto p_big = p;
        p_big.d_bar += 0.2;
        const auto bigger_dbar = propagate_interval(p_big, x0, nu, dt);
        REQUIRE(bigger_dbar.s >= base.s - 1e-14);
        REQUIRE(bigger_dbar.delta >= base.delta - 1e-14);
    }
}

TEST_CASE("negative tube states are rejected") {
    TubeParams p;
    p.lambda_An = -1.0;
    p.lambda_Ar = -0.5;
    REQUIRE_THROWS_AS(tube_rhs(p, {-0.1, 0.0}, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(propagate_interval(p, {0.0, -0.1}, {}, 0.1), std::invalid_argument);
}

TEST_CASE("stable dynamics converge to the steady state within 1%") {
    auto rng = make_rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        auto p = sample_params(rng);
        if (!p.stable()) continue;
        const InputNorms nu{0.1, 0.05, 0.0};
        const auto [s_star, d_star] = p.steady_state(nu);
        // s settles within five of its own time constants; delta needs the
        // slower of the two plus its own tail.
        const double t_s = 5.0 / std::abs(p.lambda_s());
        const auto after_s = propagate_interval(p, {0.0, 0.0}, nu, t_s);
        if (s_star > 1e-12) REQUIRE(std::abs(after_s.s - s_star) / s_star < 0.01);

        const double t_d = 7.0 / std::min(std::abs(p.lambda_s()), std::abs(p.lambda_delta()));
        const auto end = propagate_interval(p, {0.0, 0.0}, nu, t_d);
        if (d_star > 1e-12) REQUIRE(std::abs(end.delta - d_star) / d_star < 0.01);
    }
}

TEST_CASE("verify_prop1 reports no violations on the manufactured benchmark") {
    auto spec = make_benchmark_spec([] {
        BenchmarkGenConfig cfg;
        cfg.n_f = 12;
        cfg.seed = 21;
        return cfg;
    }());
    auto [model, rom] = manufacture_benchmark(spec);
    rom.constants = estimate_constants(rom, model, 1000, 31);
    const auto params = TubeParams::model_based(rom.constants, model.d_bar);

    VerifyOptions opt;
    opt.s0 = 0.02;
    opt.delta0 = 0.02;
    opt.x_r_radius = 0.2;
    opt.u_lo = Vector::Zero(4);
    opt.u_hi = Vector::Constant(4, 300.0);
    opt.d_magnitude = 0.5 * spec.u_d_magnitude;

    const auto report = verify_prop1(model, rom, params, 60, 1.0, 17, opt);
    REQUIRE(report.violations == 0);
    REQUIRE(report.left_domain < 30);
    REQUIRE(report.max_s_ratio <= 1.0);
    REQUIRE(report.max_delta_ratio <= 1.0);
    REQUIRE(report.max_s_ratio > 0.0);

    const auto csv = report.to_csv();
    REQUIRE(csv.rfind("trial,max_s_ratio,max_delta_ratio,left_domain\n", 0) == 0);
}

TEST_CASE("verify_prop1 with zero everything reports nothing") {
    auto spec = make_benchmark_spec([] {
        BenchmarkGenConfig cfg;
        cfg.n_f = 12;
        cfg.seed = 22;
        return cfg;
    }());
    auto [model, rom] = manufacture_benchmark(spec);
    rom.constants = estimate_constants(rom, model, 1000, 5);
    const auto params = TubeParams::model_based(rom.constants, 0.0);
    VerifyOptions opt;
    opt.x_r_radius = 0.0;
    const auto report = verify_prop1(model, rom, params, 5, 0.2, 3, opt);
    REQUIRE(report.violations == 0);
    REQUIRE(report.max_s_ratio == 0.0);
    REQUIRE(report.max_delta_ratio == 0.0);
}

TEST_CASE("falsification probe: undersized constants are caught") {
    // Strongly coupled two-mode plant: the fast mode feeds back into the
    // reduced drift through c(x_r) = 3 x_r^2, so the delta bound leans on the
    // full L_fnl s margin near the rim of the domain.
    BenchmarkSpec spec;
    spec.n = 1;
    spec.n_f = 2;
    spec.m = 1;
    spec.n_y = 1;
    spec.seed = 0;
    spec.blocks = {ModalBlock::scalar(-1.0), ModalBlock::scalar(-6.0)};
    spec.w_nl_true = PolynomialMap::zero(1, 1);
    spec.r_nl_true = PolynomialMap(1, 1, 2, 2);
    spec.r_nl_true.coefficients()(0, 0) = -0.05;
    spec.coupling = PolynomialMap(1, 1, 2, 2);
    spec.coupling.coefficients()(0, 0) = 4.0;
    spec.coupling_direction = Vector::Ones(1);
    spec.B = Matrix::Zero(2, 1);
    spec.B(0, 0) = 1e-4;
    spec.C = Matrix::Zero(1, 2);
    spec.C(0, 0) = 1.0;
    spec.u_d_magnitude = 0.0;
    spec.d_bar = 0.0;
    spec.domain_radius = 1.0;

    auto [model, rom] = manufacture_benchmark(spec);
    rom.constants = estimate_constants(rom, model, 4000, 7);
    const auto params = TubeParams::model_based(rom.constants, 0.0);

    VerifyOptions opt;
    opt.s0 = 0.15;
    opt.delta0 = 0.0;
    opt.x_r_radius = 0.95;
    opt.period = 0.05;
    opt.dt_sim = 0.001;
    opt.boundary_init = true;

    const auto sound = verify_prop1(model, rom, params, 60, 1.0, 19, opt);
    REQUIRE(sound.violations == 0);
    REQUIRE(sound.left_domain == 0);

    auto halved = params;
    halved.L_fnl *= 0.5;
    const auto broken = verify_prop1(model, rom, halved, 60, 1.0, 19, opt);
    REQUIRE(broken.violations > 0);
}
