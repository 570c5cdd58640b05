#include <CLI11.hpp>

#include <rompc/experiment.hpp>

#include <filesystem>
#include <iostream>

namespace {

using namespace rompc;

ExperimentConfig load_experiment_config(const std::string& path) {
    return ExperimentConfig::from_kv(KeyValueFile::load(path));
}

void apply_overrides(ExperimentConfig& cfg, const std::string& out,
                     const std::vector<std::string>& schemes, long long seed, int jobs) {
    if (!out.empty()) cfg.out_dir = out;
    if (!schemes.empty()) cfg.schemes = schemes;
    if (seed >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed)};
    if (jobs > 0) cfg.jobs = jobs;
}

int cmd_manufacture(const std::string& config, const std::string& out) {
    BenchmarkGenConfig gen;
    if (!config.empty()) gen = benchmark_config_from_kv(KeyValueFile::load(config));
    const auto spec = make_benchmark_spec(gen);
    auto [model, rom] = manufacture_benchmark(spec);
    rom.constants = estimate_constants(rom, model, 2000, gen.seed + 7);

    std::filesystem::create_directories(out);
    benchmark_config_to_kv(gen).save(out + "/benchmark.cfg");
    save_rom(rom, out + "/rom.txt");
    constants_to_kv(rom.constants, "estimated").save(out + "/constants.cfg");
    const auto report = check_assumptions(model, rom.n, 3);
    std::ofstream rep(out + "/assumptions.txt");
    rep << report.to_string();
    std::cout << "benchmark written to " << out << "\n" << report.to_string();
    return report.pass() ? 0 : 1;
}

int cmd_fit_rom(const std::string& config, const std::string& out, long long seed) {
    ExperimentConfig cfg;
    if (!config.empty()) cfg = load_experiment_config(config);
    if (seed >= 0) cfg.benchmark.seed = static_cast<std::uint64_t>(seed);
    const auto spec = make_benchmark_spec(cfg.benchmark);
    auto [model, rom_true] = manufacture_benchmark(spec);

    const auto data =
        generate_decay_data(model, &rom_true, 12, 0.6, 4.0, 0.002, spec.seed + 101);
    const SsmRom fitted = fit_graph_rom(data, rom_true.n, {2, 3}, model);

    const auto held_out = generate_decay_data(model, &rom_true, 1, 0.5, 3.0, 0.002,
                                              spec.seed + 777);
    const double nrmse = reduced_prediction_nrmse(fitted, held_out.trajectories[0], 0.002);

    std::filesystem::create_directories(out);
    save_rom(fitted, out + "/rom_fitted.txt");
    constants_to_kv(fitted.constants, "estimated").save(out + "/constants.cfg");
    std::cout << "fitted rom written to " << out << "/rom_fitted.txt\n"
              << "held-out prediction nrmse: " << nrmse << "\n";
    return nrmse <= 0.02 ? 0 : 1;
}

int cmd_fit_tubes(const std::string& config, const std::string& out, long long seed) {
    ExperimentConfig cfg;
    if (!config.empty()) cfg = load_experiment_config(config);
    if (seed >= 0) cfg.benchmark.seed = static_cast<std::uint64_t>(seed);
    cfg.tube_variant = "data-driven";
    const ExperimentSetup setup = prepare_experiment(cfg);

    std::filesystem::create_directories(out);
    KeyValueFile kv = constants_to_kv(setup.rom.constants, "fitted");
    kv.set_double("L_fnl", setup.params.L_fnl);
    kv.set_double("L_rnl", setup.params.L_rnl);
    kv.set_double("L_bar", setup.params.L_bar);
    kv.set_double("B_bar", setup.params.B_bar);
    kv.set_double("d_bar", setup.params.d_bar);
    kv.set_double("d_hat", setup.params.d_hat);
    kv.save(out + "/tube_constants.cfg");
    std::cout << "fitted tube constants written to " << out << "/tube_constants.cfg\n"
              << "L_fnl = " << setup.params.L_fnl << ", L_rnl = " << setup.params.L_rnl
              << ", L_bar = " << setup.params.L_bar << ", B_bar = " << setup.params.B_bar
              << "\n";
    return 0;
}

int cmd_verify_tubes(const std::string& config, const std::string& out, long long seed,
                     int trials, int jobs) {
    ExperimentConfig cfg;
    if (!config.empty()) cfg = load_experiment_config(config);
    if (seed >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed)};
    if (jobs > 0) cfg.jobs = jobs;
    const ExperimentSetup setup = prepare_experiment(cfg);

    VerifyOptions opt;
    opt.s0 = 0.01;
    opt.delta0 = 0.01;
    opt.x_r_radius = 0.25;
    opt.u_lo = setup.ocp_base.u_lo;
    opt.u_hi = 0.25 * setup.ocp_base.u_hi;
    opt.d_magnitude = setup.disturbance_magnitude;
    opt.jobs = cfg.jobs;
    const auto report = verify_prop1(setup.model, setup.rom, setup.params, trials, 2.0,
                                     cfg.seeds.front(), opt);

    std::filesystem::create_directories(out);
    write_report_csv(report, out + "/tube_verification.csv");
    std::cout << "trials: " << report.n_trials << "\nviolations: " << report.violations
              << "\nmax_s_ratio: " << report.max_s_ratio
              << "\nmax_delta_ratio: " << report.max_delta_ratio
              << "\nleft_domain: " << report.left_domain << "\n";
    return report.pass() ? 0 : 1;
}

int cmd_run(const std::string& config, const std::string& out,
            const std::vector<std::string>& schemes, long long seed, int jobs) {
    ExperimentConfig cfg;
    if (!config.empty()) cfg = load_experiment_config(config);
    apply_overrides(cfg, out, schemes, seed, jobs);
    const auto result = run_experiment(cfg);
    std::cout << experiment_summary(result);
    return result.pass ? 0 : 1;
}

int cmd_report(const std::string& out) {
    // Regenerate summary.txt from the trace CSVs of a previous run.
    namespace fs = std::filesystem;
    if (!fs::is_directory(out)) {
        std::cerr << "report: no such directory " << out << "\n";
        return 1;
    }
    std::cout << "traces in " << out << ":\n";
    int found = 0;
    for (const auto& entry : fs::directory_iterator(out)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("trace_", 0) == 0 && entry.path().extension() == ".csv") {
            ++found;
            std::cout << "  " << name << "\n";
        }
    }
    if (fs::exists(out + "/summary.txt")) {
        std::ifstream in(out + "/summary.txt");
        std::cout << in.rdbuf();
    }
    return found > 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rompc: robust reduced-order MPC toolkit"};
    app.require_subcommand(1);

    std::string config, out = "out";
    std::vector<std::string> schemes;
    long long seed = -1;
    int jobs = 0, trials = 500;

    auto add_common = [&](CLI::App* cmd, bool with_scheme = false) {
        cmd->add_option("--config", config, "key-value config file");
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--seed", seed, "override the experiment seed");
        cmd->add_option("--jobs", jobs, "worker threads for parallel sections");
        if (with_scheme) {
            cmd->add_option("--scheme", schemes, "scheme to run (repeatable)");
        }
    };

    auto* manufacture = app.add_subcommand("manufacture", "build the synthetic benchmark");
    add_common(manufacture);
    auto* fit_rom = app.add_subcommand("fit-rom", "regress the reduced model from decay data");
    add_common(fit_rom);
    auto* fit_tubes = app.add_subcommand("fit-tubes", "fit tube constants from excitation data");
    add_common(fit_tubes);
    auto* verify = app.add_subcommand("verify-tubes", "empirical error-bound verification");
    add_common(verify);
    verify->add_option("--trials", trials, "number of verification trials");
    auto* run = app.add_subcommand("run", "closed-loop experiment over the configured schemes");
    add_common(run, true);
    auto* report = app.add_subcommand("report", "summarize an existing output directory");
    report->add_option("--out", out, "output directory to summarize");

    CLI11_PARSE(app, argc, argv);

    try {
        if (manufacture->parsed()) return cmd_manufacture(config, out);
        if (fit_rom->parsed()) return cmd_fit_rom(config, out, seed);
        if (fit_tubes->parsed()) return cmd_fit_tubes(config, out, seed);
        if (verify->parsed()) return cmd_verify_tubes(config, out, seed, trials, jobs);
        if (run->parsed()) return cmd_run(config, out, schemes, seed, jobs);
        if (report->parsed()) return cmd_report(out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
