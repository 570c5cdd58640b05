#pragma once

#include "rompc/config.hpp"
#include "rompc/ssm.hpp"

namespace rompc {

/// Synthetic plant specification with an analytically known invariant
/// manifold. The dynamics are first written in coordinates (x_r, y_n) as
///   x_r_dot = A_r x_r + r_nl_true(x_r) + coupling(x_r) * (c_dir^T y_n)
///   y_n_dot = A_n y_n
/// and then transformed through y_n = x_n - w_nl_true(x_r), which makes
/// {y_n = 0} exactly invariant with graph map w_nl_true and reduced drift
/// r_nl_true. The coupling gain is the rank-one matrix polynomial
/// coupling(x_r) c_dir^T, which keeps evaluation linear in n_f.
struct BenchmarkSpec {
    int n = 0;
    int n_f = 0;
    int m = 0;
    int n_y = 0;
    std::uint64_t seed = 0;
    std::vector<ModalBlock> blocks;  // slow blocks first; first `n` states are reduced
    PolynomialMap w_nl_true;         // n -> (n_f - n), normal coordinates
    PolynomialMap r_nl_true;         // n -> n
    PolynomialMap coupling;          // n -> n, gain polynomial
    Vector coupling_direction;       // unit vector in normal coordinates
    Matrix B;                        // n_f x m
    Matrix C;                        // n_y x n_f
    double u_d_magnitude = 0.0;      // default actuation-noise 2-norm
    double d_bar = 0.0;
    double domain_radius = 1.0;
    int resonance_max_order = 3;

    int n_fast() const { return n_f - n; }

    std::vector<ModalBlock> slow_blocks() const {
        std::vector<ModalBlock> out;
        int at = 0;
        for (const auto& b : blocks) {
            if (at < n) out.push_back(b);
            at += b.dim();
        }
        return out;
    }
    std::vector<ModalBlock> fast_blocks() const {
        std::vector<ModalBlock> out;
        int at = 0;
        for (const auto& b : blocks) {
            if (at >= n) out.push_back(b);
            at += b.dim();
        }
        return out;
    }

    void validate() const {
        require(n >= 1 && n_f > n && m >= 1 && n_y >= 1, "BenchmarkSpec: bad dimensions");
        require(total_dim(blocks) == n_f, "BenchmarkSpec: blocks do not sum to n_f");
        int at = 0;
        for (const auto& b : blocks) {
            require(at >= n || at + b.dim() <= n, "BenchmarkSpec: n splits a rotational pair");
            at += b.dim();
        }
        require(w_nl_true.input_dim() == n && w_nl_true.output_dim() == n_fast(),
                "BenchmarkSpec: w_nl_true has wrong shape");
        require(r_nl_true.input_dim() == n && r_nl_true.output_dim() == n,
                "BenchmarkSpec: r_nl_true has wrong shape");
        require(coupling.input_dim() == n && coupling.output_dim() == n,
                "BenchmarkSpec: coupling has wrong shape");
        require(coupling_direction.size() == n_fast(),
                "BenchmarkSpec: coupling_direction has wrong size");
        require(B.rows() == n_f && B.cols() == m, "BenchmarkSpec: B has wrong shape");
        require(C.rows() == n_y && C.cols() == n_f, "BenchmarkSpec: C has wrong shape");
        // Time-scale separation: every fast mode decays faster than any slow one.
        double slow_min = 0.0, fast_max = -std::numeric_limits<double>::infinity();
        for (const auto& b : slow_blocks()) slow_min = std::min(slow_min, b.decay);
        for (const auto& b : fast_blocks()) fast_max = std::max(fast_max, b.decay);
        require(fast_max < slow_min,
                "BenchmarkSpec: fast spectrum must decay faster than the slow spectrum");
    }
};

/// f_nl of the manufactured plant, evaluated through its structured form.
/// Jacobians use analytic expressions in the fast coordinates and central
/// differences along the n reduced directions.
class ManufacturedNonlinearity final : public Nonlinearity {
public:
    ManufacturedNonlinearity(int n, std::vector<ModalBlock> slow, std::vector<ModalBlock> fast,
                             PolynomialMap w_true, PolynomialMap r_true, PolynomialMap coupling,
                             Vector c_dir)
        : n_(n),
          nn_(w_true.output_dim()),
          slow_(std::move(slow)),
          fast_(std::move(fast)),
          w_true_(std::move(w_true)),
          r_true_(std::move(r_true)),
          coupling_(std::move(coupling)),
          c_dir_(std::move(c_dir)) {}

    int dim() const override { return n_ + nn_; }

    Vector eval(const Vector& x) const override {
        const Vector x_r = x.head(n_);
        const Vector x_n = x.tail(nn_);
        const Vector w = w_true_.eval(x_r);
        const double y_proj = c_dir_.dot(x_n - w);
        const Vector cpl = coupling_.eval(x_r) * y_proj;
        const Vector rho = apply_modal(slow_, x_r) + r_true_.eval(x_r) + cpl;
        Vector f(dim());
        f.head(n_) = r_true_.eval(x_r) + cpl;
        f.tail(nn_) = -apply_modal(fast_, w) + w_true_.jacobian(x_r) * rho;
        return f;
    }

    Matrix jacobian(const Vector& x) const override {
        const int nf = dim();
        Matrix J(nf, nf);
        // Analytic in x_n: d f / d x_n = [cc c_dir^T; Jw cc c_dir^T].
        const Vector x_r = x.head(n_);
        const Vector cc = coupling_.eval(x_r);
        const Matrix Jw = w_true_.jacobian(x_r);
        J.block(0, n_, n_, nn_).noalias() = cc * c_dir_.transpose();
        J.block(n_, n_, nn_, nn_).noalias() = (Jw * cc) * c_dir_.transpose();
        // Central differences along the reduced directions.
        for (int j = 0; j < n_; ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
            Vector xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            J.col(j) = (eval(xp) - eval(xm)) / (2.0 * h);
        }
        return J;
    }

private:
    int n_;
    int nn_;
    std::vector<ModalBlock> slow_;
    std::vector<ModalBlock> fast_;
    PolynomialMap w_true_;
    PolynomialMap r_true_;
    PolynomialMap coupling_;
    Vector c_dir_;
};

/// Builds the plant and its exact reduced-order model from a spec. The
/// returned rom has empty constants; run estimate_constants to certify them.
inline std::pair<FullOrderModel, SsmRom> manufacture_benchmark(const BenchmarkSpec& spec) {
    spec.validate();
    if (spec.w_nl_true.basis().size() > 200000 || spec.r_nl_true.basis().size() > 200000) {
        throw std::invalid_argument(
            "manufacture_benchmark: polynomial degree range overflows the coefficient table");
    }
    {
        std::vector<std::complex<double>> inner = spectrum(spec.slow_blocks());
        std::vector<std::complex<double>> outer = spectrum(spec.fast_blocks());
        auto hits = find_resonances(inner, outer, spec.resonance_max_order, 1e-9);
        if (!hits.empty()) {
            throw std::invalid_argument("manufacture_benchmark: resonance detected between "
                                        "slow and fast spectra");
        }
    }

    FullOrderModel model;
    model.n_f = spec.n_f;
    model.m = spec.m;
    model.n_y = spec.n_y;
    model.blocks = spec.blocks;
    model.B = spec.B;
    model.C = spec.C;
    model.d_bar = spec.d_bar;
    model.domain_radius = spec.domain_radius;
    const bool trivial = spec.w_nl_true.is_zero() && spec.r_nl_true.is_zero() &&
                         spec.coupling.is_zero();
    if (!trivial) {
        model.f_nl = std::make_shared<ManufacturedNonlinearity>(
            spec.n, spec.slow_blocks(), spec.fast_blocks(), spec.w_nl_true, spec.r_nl_true,
            spec.coupling, spec.coupling_direction);
    }
    model.validate();

    SsmRom rom;
    rom.n = spec.n;
    rom.n_f = spec.n_f;
    rom.m = spec.m;
    rom.n_y = spec.n_y;
    rom.A_r = assemble_A(spec.slow_blocks());
    rom.reduced_blocks = spec.slow_blocks();
    rom.w_nl = PolynomialMap(spec.n, spec.n_f, spec.w_nl_true.basis().deg_min(),
                             spec.w_nl_true.basis().deg_max());
    rom.w_nl.coefficients().bottomRows(spec.n_fast()) = spec.w_nl_true.coefficients();
    rom.r_nl = spec.r_nl_true;
    rom.B_r = spec.B.topRows(spec.n);
    rom.B_n = spec.B.bottomRows(spec.n_fast());
    rom.C = spec.C;
    rom.domain_radius = spec.domain_radius;
    rom.validate();
    return {std::move(model), std::move(rom)};
}

/// Tunable knobs of the stock desk-scale benchmark.
struct BenchmarkGenConfig {
    int n = 4;
    int n_f = 200;
    int m = 4;
    int n_y = 2;
    std::uint64_t seed = 1;
    int deg_min = 2;
    int deg_max = 3;
    double slow_decay[2] = {-2.0, -3.0};
    double slow_freq[2] = {2.0, 4.5};
    double fast_decay0 = -25.0;
    double fast_decay_ratio = 1.3;
    double fast_decay_cap = -400.0;
    double fast_freq0 = 6.0;
    double fast_freq_step = 2.7;
    double w_scale = 0.4;
    double r_scale = 0.08;
    double coupling_scale = 0.25;
    double b_r_scale = 8e-4;
    double b_n_scale = 1e-4;
    double c_fast_scale = 0.03;
    double u_d_magnitude = 25.0;
    double domain_radius = 1.0;
};

/// Stock benchmark: 50 rotational pairs (n_f = 200), n = 4, cubic manifold
/// and drift, geometric fast-decay spread with a cap that keeps the plant
/// integrable by the fixed-step simulator.
inline BenchmarkSpec make_benchmark_spec(const BenchmarkGenConfig& cfg = {}) {
    require(cfg.n == 4, "make_benchmark_spec: generator is wired for n = 4 (two slow pairs)");
    require(cfg.n_f % 2 == 0 && cfg.n_f >= 8, "make_benchmark_spec: n_f must be even and >= 8");
    BenchmarkSpec spec;
    spec.n = cfg.n;
    spec.n_f = cfg.n_f;
    spec.m = cfg.m;
    spec.n_y = cfg.n_y;
    spec.seed = cfg.seed;
    spec.domain_radius = cfg.domain_radius;
    spec.u_d_magnitude = cfg.u_d_magnitude;

    spec.blocks.push_back(ModalBlock::pair(cfg.slow_decay[0], cfg.slow_freq[0]));
    spec.blocks.push_back(ModalBlock::pair(cfg.slow_decay[1], cfg.slow_freq[1]));
    const int fast_pairs = (cfg.n_f - cfg.n) / 2;
    for (int j = 0; j < fast_pairs; ++j) {
        const double decay =
            std::max(cfg.fast_decay_cap, cfg.fast_decay0 * std::pow(cfg.fast_decay_ratio, j));
        spec.blocks.push_back(ModalBlock::pair(decay, cfg.fast_freq0 + cfg.fast_freq_step * j));
    }

    auto rng = make_rng(cfg.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const int nn = spec.n_fast();

    auto fill_scaled = [&](PolynomialMap& p, double scale, double dim_norm) {
        for (int k = 0; k < p.basis().size(); ++k) {
            int deg = 0;
            for (int e : p.basis().exponent(k)) deg += e;
            const double s = scale / (static_cast<double>(deg) * dim_norm);
            for (int i = 0; i < p.output_dim(); ++i) p.coefficients()(i, k) = s * unit(rng);
        }
    };

    spec.w_nl_true = PolynomialMap(cfg.n, nn, cfg.deg_min, cfg.deg_max);
    fill_scaled(spec.w_nl_true, cfg.w_scale, std::sqrt(static_cast<double>(nn)));
    // Faster modes carry proportionally smaller manifold components, the way
    // homological-equation denominators shrink SSM coefficients; this keeps
    // the A_n w_nl' contribution to L_fnl bounded by the slowest fast mode.
    {
        const auto fast = spec.fast_blocks();
        int row = 0;
        for (const auto& b : fast) {
            const double weight = std::abs(cfg.fast_decay0 / b.decay);
            for (int r = 0; r < b.dim(); ++r) {
                spec.w_nl_true.coefficients().row(row++) *= weight;
            }
        }
    }
    spec.r_nl_true = PolynomialMap(cfg.n, cfg.n, cfg.deg_min, cfg.deg_max);
    fill_scaled(spec.r_nl_true, cfg.r_scale, std::sqrt(static_cast<double>(cfg.n)));
    spec.coupling = PolynomialMap(cfg.n, cfg.n, cfg.deg_min, cfg.deg_max);
    fill_scaled(spec.coupling, cfg.coupling_scale, std::sqrt(static_cast<double>(cfg.n)));
    spec.coupling_direction = sphere_sample(rng, nn, 1.0);

    // Inputs act strongly on the slow modes and progressively less on fast ones.
    spec.B = Matrix::Zero(cfg.n_f, cfg.m);
    for (int i = 0; i < cfg.n; ++i) {
        for (int j = 0; j < cfg.m; ++j) {
            spec.B(i, j) = cfg.b_r_scale * ((i == j ? 1.0 : 0.0) + 0.25 * unit(rng));
        }
    }
    for (int i = cfg.n; i < cfg.n_f; ++i) {
        const int pair_idx = (i - cfg.n) / 2;
        for (int j = 0; j < cfg.m; ++j) {
            spec.B(i, j) = cfg.b_n_scale * unit(rng) / (1.0 + 0.5 * pair_idx);
        }
    }

    // Outputs read the slow pair positions plus a weak fast-mode bleed.
    spec.C = Matrix::Zero(cfg.n_y, cfg.n_f);
    spec.C(0, 0) = 1.0;
    spec.C(0, 2) = 0.4;
    spec.C(1, 1) = 1.0;
    spec.C(1, 3) = 0.4;
    for (int i = cfg.n; i < cfg.n_f; ++i) {
        const int pair_idx = (i - cfg.n) / 2;
        for (int r = 0; r < cfg.n_y; ++r) {
            spec.C(r, i) = cfg.c_fast_scale * unit(rng) / (1.0 + pair_idx);
        }
    }

    spec.d_bar = spec.B.operatorNorm() * cfg.u_d_magnitude;
    spec.validate();
    return spec;
}

/// Serialization of the generator knobs: documented keys covering dims,
/// spectra, degrees, seed and the disturbance bound.
inline KeyValueFile benchmark_config_to_kv(const BenchmarkGenConfig& cfg) {
    KeyValueFile kv;
    kv.set("type", "benchmark-gen-v1");
    kv.set_int("n", cfg.n);
    kv.set_int("n_f", cfg.n_f);
    kv.set_int("m", cfg.m);
    kv.set_int("n_y", cfg.n_y);
    kv.set_int("seed", static_cast<long long>(cfg.seed));
    kv.set_int("deg_min", cfg.deg_min);
    kv.set_int("deg_max", cfg.deg_max);
    kv.set_double("slow_decay_1", cfg.slow_decay[0]);
    kv.set_double("slow_decay_2", cfg.slow_decay[1]);
    kv.set_double("slow_freq_1", cfg.slow_freq[0]);
    kv.set_double("slow_freq_2", cfg.slow_freq[1]);
    kv.set_double("fast_decay0", cfg.fast_decay0);
    kv.set_double("fast_decay_ratio", cfg.fast_decay_ratio);
    kv.set_double("fast_decay_cap", cfg.fast_decay_cap);
    kv.set_double("fast_freq0", cfg.fast_freq0);
    kv.set_double("fast_freq_step", cfg.fast_freq_step);
    kv.set_double("w_scale", cfg.w_scale);
    kv.set_double("r_scale", cfg.r_scale);
    kv.set_double("coupling_scale", cfg.coupling_scale);
    kv.set_double("b_r_scale", cfg.b_r_scale);
    kv.set_double("b_n_scale", cfg.b_n_scale);
    kv.set_double("c_fast_scale", cfg.c_fast_scale);
    kv.set_double("u_d_magnitude", cfg.u_d_magnitude);
    kv.set_double("domain_radius", cfg.domain_radius);
    return kv;
}

inline BenchmarkGenConfig benchmark_config_from_kv(const KeyValueFile& kv) {
    BenchmarkGenConfig cfg;
    if (kv.get_string("type", "benchmark-gen-v1") != "benchmark-gen-v1") {
        throw std::runtime_error("benchmark config: unknown type tag");
    }
    cfg.n = static_cast<int>(kv.get_int("n", cfg.n));
    cfg.n_f = static_cast<int>(kv.get_int("n_f", cfg.n_f));
    cfg.m = static_cast<int>(kv.get_int("m", cfg.m));
    cfg.n_y = static_cast<int>(kv.get_int("n_y", cfg.n_y));
    cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(cfg.seed)));
    cfg.deg_min = static_cast<int>(kv.get_int("deg_min", cfg.deg_min));
    cfg.deg_max = static_cast<int>(kv.get_int("deg_max", cfg.deg_max));
    cfg.slow_decay[0] = kv.get_double("slow_decay_1", cfg.slow_decay[0]);
    cfg.slow_decay[1] = kv.get_double("slow_decay_2", cfg.slow_decay[1]);
    cfg.slow_freq[0] = kv.get_double("slow_freq_1", cfg.slow_freq[0]);
    cfg.slow_freq[1] = kv.get_double("slow_freq_2", cfg.slow_freq[1]);
    cfg.fast_decay0 = kv.get_double("fast_decay0", cfg.fast_decay0);
    cfg.fast_decay_ratio = kv.get_double("fast_decay_ratio", cfg.fast_decay_ratio);
    cfg.fast_decay_cap = kv.get_double("fast_decay_cap", cfg.fast_decay_cap);
    cfg.fast_freq0 = kv.get_double("fast_freq0", cfg.fast_freq0);
    cfg.fast_freq_step = kv.get_double("fast_freq_step", cfg.fast_freq_step);
    cfg.w_scale = kv.get_double("w_scale", cfg.w_scale);
    cfg.r_scale = kv.get_double("r_scale", cfg.r_scale);
    cfg.coupling_scale = kv.get_double("coupling_scale", cfg.coupling_scale);
    cfg.b_r_scale = kv.get_double("b_r_scale", cfg.b_r_scale);
    cfg.b_n_scale = kv.get_double("b_n_scale", cfg.b_n_scale);
    cfg.c_fast_scale = kv.get_double("c_fast_scale", cfg.c_fast_scale);
    cfg.u_d_magnitude = kv.get_double("u_d_magnitude", cfg.u_d_magnitude);
    cfg.domain_radius = kv.get_double("domain_radius", cfg.domain_radius);
    return cfg;
}

}  // namespace rompc
