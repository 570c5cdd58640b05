#pragma once

#include "rompc/modal.hpp"
#include "rompc/polynomial.hpp"

#include <memory>
#include <optional>
#include <sstream>

namespace rompc {

/// Nonlinear drift term f_nl with f_nl(0) = 0 and f_nl'(0) = 0. Implemented
/// as an interface so that structured benchmark nonlinearities do not need a
/// dense coefficient table over hundreds of state variables.
class Nonlinearity {
public:
    virtual ~Nonlinearity() = default;
    virtual int dim() const = 0;
    virtual Vector eval(const Vector& x) const = 0;
    virtual Matrix jacobian(const Vector& x) const = 0;
};

class PolynomialNonlinearity final : public Nonlinearity {
public:
    explicit PolynomialNonlinearity(PolynomialMap p) : p_(std::move(p)) {
        require(p_.input_dim() == p_.output_dim(),
                "PolynomialNonlinearity: map must be square");
    }
    int dim() const override { return p_.input_dim(); }
    Vector eval(const Vector& x) const override { return p_.eval(x); }
    Matrix jacobian(const Vector& x) const override { return p_.jacobian(x); }
    const PolynomialMap& map() const { return p_; }

private:
    PolynomialMap p_;
};

/// High-dimensional plant in modal coordinates:
///   x_dot = A x + f_nl(x) + B u + d,   ||d|| <= d_bar,
/// with A block-diagonal and blocks ordered from slowest to fastest.
struct FullOrderModel {
    int n_f = 0;
    int m = 0;
    int n_y = 0;
    std::vector<ModalBlock> blocks;
    std::shared_ptr<const Nonlinearity> f_nl;  // null means f_nl == 0
    Matrix B;
    Matrix C;
    double d_bar = 0.0;
    double domain_radius = 1.0;

    Matrix A() const { return assemble_A(blocks); }
    Vector apply_A(const Vector& x) const { return apply_modal(blocks, x); }

    Vector eval_f_nl(const Vector& x) const {
        return f_nl ? f_nl->eval(x) : Vector::Zero(n_f);
    }

    void validate() const {
        require(n_f >= 1 && m >= 1 && n_y >= 1, "FullOrderModel: bad dimensions");
        require(total_dim(blocks) == n_f, "FullOrderModel: blocks do not sum to n_f");
        require(B.rows() == n_f && B.cols() == m, "FullOrderModel: B has wrong shape");
        require(C.rows() == n_y && C.cols() == n_f, "FullOrderModel: C has wrong shape");
        require(d_bar >= 0.0 && domain_radius > 0.0, "FullOrderModel: bad bounds");
        double prev = 0.0;
        bool first = true;
        for (const auto& b : blocks) {
            require(b.decay < 0.0, "FullOrderModel: non-Hurwitz block");
            if (!first) {
                require(b.decay <= prev + 1e-12,
                        "FullOrderModel: blocks must be ordered slowest to fastest");
            }
            prev = b.decay;
            first = false;
        }
        if (f_nl) require(f_nl->dim() == n_f, "FullOrderModel: f_nl dimension mismatch");
    }
};

inline Vector eval_rhs(const FullOrderModel& model, const Vector& x, const Vector& u,
                       const Vector& d) {
    require(x.size() == model.n_f, "eval_rhs: state dimension mismatch");
    require(u.size() == model.m, "eval_rhs: input dimension mismatch");
    require(d.size() == model.n_f, "eval_rhs: disturbance dimension mismatch");
    Vector dx = model.apply_A(x);
    if (model.f_nl) dx += model.f_nl->eval(x);
    dx.noalias() += model.B * u;
    dx += d;
    return dx;
}

/// Piecewise-constant signal: value k applies on [k*period, (k+1)*period).
class PiecewiseConstantSignal {
public:
    PiecewiseConstantSignal() = default;
    PiecewiseConstantSignal(double period, Matrix values)
        : period_(period), values_(std::move(values)) {
        require(period_ > 0.0, "PiecewiseConstantSignal: period must be positive");
        require(values_.cols() >= 1, "PiecewiseConstantSignal: no samples");
    }

    static PiecewiseConstantSignal constant(double period, const Vector& v, int count) {
        Matrix vals(v.size(), count);
        vals.colwise() = v;
        return {period, std::move(vals)};
    }

    static PiecewiseConstantSignal zero(double period, int dim, int count) {
        return {period, Matrix::Zero(dim, count)};
    }

    int dim() const { return static_cast<int>(values_.rows()); }
    int count() const { return static_cast<int>(values_.cols()); }
    double period() const { return period_; }
    double t_final() const { return period_ * count(); }
    const Matrix& values() const { return values_; }

    Vector at(double t) const {
        int k = static_cast<int>(std::floor(t / period_ + 1e-9));
        k = std::clamp(k, 0, count() - 1);
        return values_.col(k);
    }

private:
    double period_ = 1.0;
    Matrix values_;
};

struct Trajectory {
    std::vector<double> times;
    Matrix states;  // n_f x times.size()

    int samples() const { return static_cast<int>(times.size()); }
    Vector state(int k) const { return states.col(k); }
};

namespace detail {
inline Vector rk4_step(const std::function<Vector(double, const Vector&)>& f, double t,
                       const Vector& x, double dt) {
    const Vector k1 = f(t, x);
    const Vector k2 = f(t + 0.5 * dt, x + (0.5 * dt) * k1);
    const Vector k3 = f(t + 0.5 * dt, x + (0.5 * dt) * k2);
    const Vector k4 = f(t + dt, x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}
}  // namespace detail

/// Fixed-step RK4 simulation of the plant. Inputs and disturbances are held
/// constant within their schedule periods, which must be integer multiples of
/// dt_sim. Throws on non-finite states (divergence).
inline Trajectory simulate(const FullOrderModel& model, const Vector& x0,
                           const PiecewiseConstantSignal& u_signal,
                           const PiecewiseConstantSignal& d_signal, double t_final,
                           double dt_sim) {
    require(x0.size() == model.n_f, "simulate: x0 dimension mismatch");
    require(dt_sim > 0.0 && t_final > 0.0, "simulate: bad time parameters");
    require(u_signal.dim() == model.m, "simulate: input schedule dimension mismatch");
    require(d_signal.dim() == model.n_f, "simulate: disturbance schedule dimension mismatch");
    require(u_signal.period() + 1e-12 >= dt_sim,
            "simulate: dt_sim must not exceed the control period");
    const double ratio = u_signal.period() / dt_sim;
    require(std::abs(ratio - std::round(ratio)) < 1e-6,
            "simulate: control period must be an integer multiple of dt_sim");
    require(u_signal.t_final() + 1e-9 >= t_final, "simulate: input schedule too short");
    require(d_signal.t_final() + 1e-9 >= t_final, "simulate: disturbance schedule too short");

    const int steps = static_cast<int>(std::round(t_final / dt_sim));
    Trajectory traj;
    traj.times.resize(steps + 1);
    traj.states.resize(model.n_f, steps + 1);
    Vector x = x0;
    traj.times[0] = 0.0;
    traj.states.col(0) = x;
    for (int k = 0; k < steps; ++k) {
        const double t = k * dt_sim;
        const Vector u = u_signal.at(t);
        const Vector d = d_signal.at(t);
        auto rhs = [&](double, const Vector& xs) {
            Vector dx = model.apply_A(xs);
            if (model.f_nl) dx += model.f_nl->eval(xs);
            dx.noalias() += model.B * u;
            dx += d;
            return dx;
        };
        x = detail::rk4_step(rhs, t, x, dt_sim);
        if (!x.allFinite()) {
            std::ostringstream oss;
            oss << "simulate: non-finite state at t=" << t + dt_sim
                << " (divergent trajectory)";
            throw std::runtime_error(oss.str());
        }
        traj.times[k + 1] = t + dt_sim;
        traj.states.col(k + 1) = x;
    }
    return traj;
}

/// Assumption report for a given reduced dimension.
struct AssumptionReport {
    bool hurwitz = false;
    bool semisimple = false;  // guaranteed by the modal block form
    bool non_resonant = false;
    int max_order = 0;
    std::vector<ResonanceHit> violations;

    bool pass() const { return hurwitz && semisimple && non_resonant; }

    std::string to_string() const {
        std::ostringstream oss;
        oss << "hurwitz: " << (hurwitz ? "ok" : "FAIL") << "\n"
            << "semisimple: " << (semisimple ? "ok" : "FAIL") << "\n"
            << "non-resonance (orders 2.." << max_order << "): "
            << (non_resonant ? "ok" : "FAIL") << "\n";
        for (const auto& hit : violations) {
            oss << "  outer eigenvalue " << hit.outer.real();
            if (hit.outer.imag() != 0.0) oss << (hit.outer.imag() > 0 ? "+" : "") << hit.outer.imag() << "i";
            oss << " matches combination [";
            for (std::size_t i = 0; i < hit.multiplicity.size(); ++i) {
                if (i) oss << ",";
                oss << hit.multiplicity[i];
            }
            oss << "]\n";
        }
        return oss.str();
    }
};

/// Splits the spectrum at reduced dimension n and scans for outer eigenvalues
/// that are integer combinations (orders 2..max_order) of the inner spectrum.
inline AssumptionReport check_assumptions(const FullOrderModel& model, int n,
                                          int max_order, double tol = 1e-9) {
    require(n >= 1 && n <= model.n_f, "check_assumptions: need 1 <= n <= n_f");
    AssumptionReport report;
    report.max_order = max_order;
    report.hurwitz = true;
    for (const auto& b : model.blocks) {
        if (!(b.decay < 0.0)) report.hurwitz = false;
    }
    report.semisimple = true;  // real modal blocks are diagonalizable by construction

    std::vector<std::complex<double>> inner, outer;
    int at = 0;
    for (const auto& b : model.blocks) {
        auto eig = spectrum({b});
        require(at >= n || at + b.dim() <= n,
                "check_assumptions: n splits a rotational pair");
        auto& dst = (at < n) ? inner : outer;
        dst.insert(dst.end(), eig.begin(), eig.end());
        at += b.dim();
    }
    report.violations = find_resonances(inner, outer, max_order, tol);
    report.non_resonant = report.violations.empty();
    return report;
}

/// Actuation-noise disturbance d(t) = B u_d(t) with u_d uniformly random on
/// the sphere of the given magnitude, resampled every period. Returns the
/// n_f-dimensional disturbance schedule.
inline PiecewiseConstantSignal sample_disturbance(const FullOrderModel& model,
                                                  double magnitude, double period,
                                                  double t_final, std::uint64_t seed) {
    require(magnitude >= 0.0, "sample_disturbance: magnitude must be >= 0");
    const double b_norm = model.B.operatorNorm();
    if (b_norm * magnitude > model.d_bar + 1e-12) {
        std::ostringstream oss;
        oss << "sample_disturbance: magnitude " << magnitude << " can produce ||d|| up to "
            << b_norm * magnitude << " > d_bar = " << model.d_bar;
        throw std::invalid_argument(oss.str());
    }
    const int count = std::max(1, static_cast<int>(std::ceil(t_final / period - 1e-9)));
    Matrix d(model.n_f, count);
    auto rng = make_rng(seed);
    for (int k = 0; k < count; ++k) {
        if (magnitude == 0.0) {
            d.col(k).setZero();
        } else {
            d.col(k) = model.B * sphere_sample(rng, model.m, magnitude);
        }
    }
    return {period, std::move(d)};
}

}  // namespace rompc
