#include <catch2/catch_amalgamated.hpp>

#include <rompc/benchmark.hpp>
#include <rompc/terminal.hpp>

#include "oracles.hpp"

using namespace rompc;

namespace {

struct Bench {
    FullOrderModel model;
    SsmRom rom;
    PolytopicConstraints cons;
};

Bench make_bench(std::uint64_t seed = 1, bool linear = false) {
    BenchmarkGenConfig cfg;
    cfg.n_f = 12;
    cfg.seed = seed;
    auto spec = make_benchmark_spec(cfg);
    if (linear) {
        spec.w_nl_true.coefficients().setZero();
        spec.r_nl_true.coefficients().setZero();
        spec.coupling.coefficients().setZero();
    }
    Bench b;
    auto [model, rom] = manufacture_benchmark(spec);
    b.model = std::move(model);
    b.rom = std::move(rom);
    b.rom.constants = estimate_constants(b.rom, b.model, 1000, seed + 5);
    b.cons.G = Matrix(4, 2);
    b.cons.G << 1, 0, -1, 0, 0, 1, 0, -1;
    b.cons.g = Vector::Constant(4, 0.35);
    return b;
}

}  // namespace

TEST_CASE("row Lipschitz constants are the exact row norms") {
    PolytopicConstraints cons;
    cons.G = Matrix(2, 3);
    cons.G << 3.0, 4.0, 0.0, 1.0, -2.0, 2.0;
    cons.g = Vector::Ones(2);
    REQUIRE(cons.row_lipschitz(0) == Catch::Approx(5.0).epsilon(1e-15));
    REQUIRE(cons.row_lipschitz(1) == Catch::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("tightened value reduces to the plain constraint at zero tubes") {
    const auto b = make_bench();
    auto rng = make_rng(3);
    for (int i = 0; i < 200; ++i) {
        const Vector z_r = ball_sample(rng, 4, 0.5);
        const Vector y = b.rom.C * lift(b.rom, z_r);
        for (int j = 0; j < b.cons.rows(); ++j) {
            REQUIRE(tightened_value(b.cons, b.rom, z_r, 0.0, 0.0, j) ==
                    Catch::Approx(b.cons.value(y, j)).margin(1e-14));
        }
    }
}

TEST_CASE("tightening is monotone in both tube radii") {
    const auto b = make_bench();
    auto rng = make_rng(5);
    std::uniform_real_distribution<double> unit(0.0, 0.3);
    for (int i = 0; i < 300; ++i) {
        const Vector z_r = ball_sample(rng, 4, 0.5);
        const double d0 = unit(rng), s0 = unit(rng);
        const int j = i % b.cons.rows();
        const double base = tightened_value(b.cons, b.rom, z_r, d0, s0, j);
        REQUIRE(tightened_value(b.cons, b.rom, z_r, d0 + 0.05, s0, j) >= base);
        REQUIRE(tightened_value(b.cons, b.rom, z_r, d0, s0 + 0.05, j) >= base);
        REQUIRE(base > tightened_value(b.cons, b.rom, z_r, 0.0, 0.0, j) - 1e-14);
    }
}

TEST_CASE("row index out of range throws") {
    const auto b = make_bench();
    REQUIRE_THROWS_AS(tightened_value(b.cons, b.rom, Vector::Zero(4), 0.0, 0.0, 4),
                      std::out_of_range);
    REQUIRE_THROWS_AS(tightened_value(b.cons, b.rom, Vector::Zero(4), 0.0, 0.0, -1),
                      std::out_of_range);
}

TEST_CASE("Prop-2 style soundness over random perturbations") {
    const auto b = make_bench(11);
    auto rng = make_rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int checked = 0;
    for (int i = 0; i < 10000; ++i) {
        const Vector z_r = ball_sample(rng, 4, 0.35);
        const double s = 0.08 * unit(rng);
        const double delta = 0.08 * unit(rng);
        // True state consistent with the tubes: x_r within delta of z_r and
        // off-manifold component within s.
        const Vector x_r = z_r + ball_sample(rng, 4, delta);
        Vector x = lift(b.rom, x_r);
        x.tail(8) += ball_sample(rng, 8, s);

        for (int j = 0; j < b.cons.rows(); ++j) {
            if (tightened_value(b.cons, b.rom, z_r, delta, s, j) <= 0.0) {
                ++checked;
                const double true_value = b.cons.value(b.model.C * x, j);
                REQUIRE(true_value <= 1e-12);
            }
        }
    }
    REQUIRE(checked > 1000);  // the scenario must actually exercise the bound
}

TEST_CASE("terminal set for the linear benchmark at the origin is degenerate") {
    auto b = make_bench(2, true);
    b.rom.constants = estimate_constants(b.rom, b.model, 1000, 3);
    auto params = TubeParams::model_based(b.rom.constants, 0.0);
    const auto ts = compute_terminal_set(b.rom, params, b.cons,
                                         ReferenceTarget::reduced(Vector::Zero(4)));
    REQUIRE(ts.z_bar.norm() == 0.0);
    REQUIRE(ts.u_bar.norm() < 1e-12);
    REQUIRE(ts.degenerate());

    const auto report = check_terminal(ts, b.rom, params, b.cons, 0.02);
    REQUIRE(report.pass());
}

TEST_CASE("terminal box sits at 1.05x the analytic tube equilibrium") {
    const auto b = make_bench(4);
    const auto params = TubeParams::model_based(b.rom.constants, b.model.d_bar);
    REQUIRE(params.stable());
    const auto ts = compute_terminal_set(b.rom, params, b.cons,
                                         ReferenceTarget::reduced(Vector::Zero(4)));
    // Equilibrium of the conservative recursion the controller enforces.
    const auto [s_eq, d_eq] = params.steady_state(input_norm_upper_bounds(b.rom, ts.u_bar));
    REQUIRE(ts.s_max == Catch::Approx(1.05 * s_eq).epsilon(1e-12));
    REQUIRE(ts.delta_max == Catch::Approx(1.05 * d_eq).epsilon(1e-12));

    const auto report = check_terminal(ts, b.rom, params, b.cons, 0.02);
    REQUIRE(report.pass());
    // The exact-norm flow is dominated by the 1-norm flow, so the same box
    // is invariant for it as well.
    const auto exact_report = check_terminal(ts, b.rom, params, b.cons, 0.02, 9, true);
    REQUIRE(exact_report.invariance_ok);
}

TEST_CASE("steady pair solves the output setpoint through the manifold") {
    const auto b = make_bench(6);
    Vector y_ref(2);
    y_ref << 0.12, -0.08;
    const auto [z_bar, u_bar] = solve_steady_pair(b.rom, ReferenceTarget::output(y_ref));
    REQUIRE((b.rom.A_r * z_bar + b.rom.r_nl.eval(z_bar) + b.rom.B_r * u_bar).norm() < 1e-8);
    REQUIRE((b.rom.C * lift(b.rom, z_bar) - y_ref).norm() < 1e-8);
}

TEST_CASE("references outside the tightened-reachable set are rejected") {
    const auto b = make_bench(8);
    const auto params = TubeParams::model_based(b.rom.constants, b.model.d_bar);
    // A setpoint on the constraint boundary cannot absorb the equilibrium tubes.
    Vector y_ref(2);
    y_ref << 0.35, 0.0;
    REQUIRE_THROWS_WITH(
        compute_terminal_set(b.rom, params, b.cons, ReferenceTarget::output(y_ref)),
        Catch::Matchers::ContainsSubstring("closer to the origin"));
}

TEST_CASE("steady inputs outside the input set are rejected") {
    const auto b = make_bench(9);
    const auto params = TubeParams::model_based(b.rom.constants, b.model.d_bar);
    TerminalOptions opt;
    opt.u_lo = Vector::Zero(4);
    opt.u_hi = Vector::Constant(4, 1e-6);  // essentially no actuation allowed
    Vector y_ref(2);
    y_ref << 0.1, 0.0;
    REQUIRE_THROWS_WITH(compute_terminal_set(b.rom, params, b.cons,
                                             ReferenceTarget::output(y_ref), opt),
                        Catch::Matchers::ContainsSubstring("input set"));
}

TEST_CASE("unstable tube dynamics cannot produce a terminal set") {
    const auto b = make_bench(10);
    auto params = TubeParams::model_based(b.rom.constants, b.model.d_bar);
    params.L_rnl = std::abs(params.lambda_Ar) + 1.0;  // destabilize delta dynamics
    REQUIRE_FALSE(params.stable());
    REQUIRE_THROWS_WITH(compute_terminal_set(b.rom, params, b.cons,
                                             ReferenceTarget::reduced(Vector::Zero(4))),
                        Catch::Matchers::ContainsSubstring("unstable"));
}

TEST_CASE("tampered terminal boxes fail the checks") {
    const auto b = make_bench(12);
    const auto params = TubeParams::model_based(b.rom.constants, b.model.d_bar);
    auto ts = compute_terminal_set(b.rom, params, b.cons,
                                   ReferenceTarget::reduced(Vector::Zero(4)));

    // Inflating the corner keeps invariance (the stable monotone dynamics
    // contract from above) but violates the tightened constraints there.
    auto inflated = ts;
    inflated.s_max *= 10.0;
    inflated.delta_max *= 10.0;
    const auto r1 = check_terminal(inflated, b.rom, params, b.cons, 0.02);
    REQUIRE(r1.invariance_ok);
    REQUIRE_FALSE(r1.constraints_ok);
    REQUIRE_FALSE(r1.pass());

    // Shrinking below the equilibrium makes the flow point outward.
    auto shrunk = ts;
    shrunk.s_max *= 0.5;
    shrunk.delta_max *= 0.5;
    const auto r2 = check_terminal(shrunk, b.rom, params, b.cons, 0.02);
    REQUIRE_FALSE(r2.invariance_ok);
}

TEST_CASE("constraint set meets the manifold image (footnote check)") {
    const auto b = make_bench(13);
    REQUIRE(constraints_meet_manifold(b.cons, b.rom, 100, 3));

    PolytopicConstraints far;
    far.G = Matrix(2, 2);
    far.G << 1, 0, -1, 0;
    far.g = Vector(2);
    far.g << -50.0, 49.0;  // demands y_1 <= -50: unreachable on the ball
    REQUIRE_FALSE(constraints_meet_manifold(far, b.rom, 200, 3));
}
