#pragma once

#include "rompc/ssm.hpp"

#include <array>

namespace rompc {

/// Coefficients of the scalar bounding error dynamics. The model-based form
///   s_dot     = lambda_An s + (1 + L_wnl)(L_fnl s + d_bar) + ||B_n u|| + L_wnl ||B_r u||
///   delta_dot = (lambda_Ar + L_rnl) delta + L_fnl s + d_bar
/// uses certified constants; the data-driven form replaces the s equation by
///   s_dot = (lambda_An + L_bar) s + B_bar ||u|| + d_hat.
struct TubeParams {
    enum class Variant { ModelBased, DataDriven };

    Variant variant = Variant::ModelBased;
    double lambda_An = -1.0;
    double lambda_Ar = -0.5;
    double L_fnl = 0.0;
    double L_wnl = 0.0;
    double L_rnl = 0.0;
    double d_bar = 0.0;
    double L_bar = 0.0;  // data-driven only
    double B_bar = 0.0;  // data-driven only
    double d_hat = 0.0;  // data-driven only

    static TubeParams model_based(const RomConstants& k, double d_bar) {
        TubeParams p;
        p.variant = Variant::ModelBased;
        p.lambda_An = k.lambda_An;
        p.lambda_Ar = k.lambda_Ar;
        p.L_fnl = k.L_fnl;
        p.L_wnl = k.L_wnl;
        p.L_rnl = k.L_rnl;
        p.d_bar = d_bar;
        p.validate();
        return p;
    }

    static TubeParams data_driven(double lambda_An, double lambda_Ar, double L_fnl,
                                  double L_rnl, double L_bar, double B_bar, double d_bar,
                                  double d_hat) {
        TubeParams p;
        p.variant = Variant::DataDriven;
        p.lambda_An = lambda_An;
        p.lambda_Ar = lambda_Ar;
        p.L_fnl = L_fnl;
        p.L_rnl = L_rnl;
        p.L_bar = L_bar;
        p.B_bar = B_bar;
        p.d_bar = d_bar;
        p.d_hat = d_hat;
        p.validate();
        return p;
    }

    void validate() const {
        require(L_fnl >= 0.0 && L_wnl >= 0.0 && L_rnl >= 0.0 && d_bar >= 0.0,
                "TubeParams: constants must be nonnegative");
        require(L_bar >= 0.0 && B_bar >= 0.0 && d_hat >= 0.0,
                "TubeParams: data-driven constants must be nonnegative");
        require(lambda_An < 0.0 && lambda_Ar < 0.0, "TubeParams: spectra must be stable");
    }

    double lambda_s() const {
        return variant == Variant::ModelBased ? lambda_An + (1.0 + L_wnl) * L_fnl
                                              : lambda_An + L_bar;
    }
    double lambda_delta() const { return lambda_Ar + L_rnl; }

    /// Whether both scalar dynamics are contracting. May legitimately be
    /// false; bounds remain valid but grow.
    bool stable() const { return lambda_s() < 0.0 && lambda_delta() < 0.0; }

    double s_forcing(const InputNorms& nu) const {
        return variant == Variant::ModelBased
                   ? (1.0 + L_wnl) * d_bar + nu.bn_u + L_wnl * nu.br_u
                   : B_bar * nu.u + d_hat;
    }
    double delta_forcing() const { return d_bar; }

    /// Steady state of (s, delta) under constant input norms; requires stable().
    std::pair<double, double> steady_state(const InputNorms& nu) const {
        require(stable(), "TubeParams: steady state requires stable tube dynamics");
        const double s = -s_forcing(nu) / lambda_s();
        const double d = -(L_fnl * s + delta_forcing()) / lambda_delta();
        return {s, d};
    }
};

/// Current size of the off-manifold bound s and on-manifold bound delta.
struct TubeState {
    double s = 0.0;
    double delta = 0.0;

    void validate() const {
        require(s >= 0.0 && delta >= 0.0, "TubeState: s and delta must be nonnegative");
    }
};

/// (s_dot, delta_dot) at the given state and input norms.
inline std::pair<double, double> tube_rhs(const TubeParams& params, const TubeState& state,
                                          const InputNorms& nu) {
    state.validate();
    const double ds = params.lambda_s() * state.s + params.s_forcing(nu);
    const double dd = params.lambda_delta() * state.delta + params.L_fnl * state.s +
                      params.delta_forcing();
    return {ds, dd};
}

namespace detail {

/// phi_1..phi_kmax at z, with phi_k(z) = (e^z - 1 - z - ... ) / z^k and
/// phi_k(0) = 1/k!. Series for small |z|, upward recurrence otherwise.
template <int KMax>
inline std::array<double, KMax + 1> phi_functions(double z) {
    std::array<double, KMax + 1> phi{};
    phi[0] = std::exp(z);
    if (std::abs(z) <= 0.9) {
        for (int k = 1; k <= KMax; ++k) {
            double term = 1.0, sum = 0.0;
            double kfact = 1.0;
            for (int j = 1; j <= k; ++j) kfact *= j;
            term = 1.0 / kfact;
            sum = term;
            for (int j = 1; j <= 34; ++j) {
                term *= z / static_cast<double>(j + k);
                sum += term;
                if (std::abs(term) < 1e-18 * std::abs(sum)) break;
            }
            phi[k] = sum;
        }
    } else {
        double fact = 1.0;  // (k-1)! running
        for (int k = 1; k <= KMax; ++k) {
            phi[k] = (phi[k - 1] - 1.0 / fact) / z;
            fact *= k;
        }
    }
    return phi;
}

}  // namespace detail

/// Coefficients of the exact affine step over an interval of length dt:
///   s+     = e_s s0 + g_s c_s
///   delta+ = e_d d0 + L_fnl (psi s0 + K c_s) + g_d c_d
/// with c_s = s_forcing(nu) and c_d = delta_forcing().
struct TubeStepCoeffs {
    double dt = 0.0;
    double e_s = 1.0;
    double g_s = 0.0;
    double e_d = 1.0;
    double psi = 0.0;
    double K = 0.0;
    double g_d = 0.0;
};

inline TubeStepCoeffs tube_step_coeffs(const TubeParams& params, double dt) {
    require(dt > 0.0, "tube_step_coeffs: dt must be positive");
    const double ls = params.lambda_s();
    const double ld = params.lambda_delta();
    const double z = ls * dt;
    const double w = ld * dt;

    const auto phi_s = detail::phi_functions<1>(z);
    const auto phi_d = detail::phi_functions<14>(w);
    const auto phi_mix = detail::phi_functions<1>(z - w);

    TubeStepCoeffs c;
    c.dt = dt;
    c.e_s = phi_s[0];
    c.g_s = dt * phi_s[1];
    c.e_d = phi_d[0];
    // psi = integral_0^dt e^{ld (dt - tau)} e^{ls tau} dtau
    c.psi = dt * phi_d[0] * phi_mix[1];
    // K = integral_0^dt e^{ld (dt - tau)} (e^{ls tau} - 1)/ls dtau
    if (std::abs(z) > 0.5) {
        c.K = (c.psi - dt * phi_d[1]) / ls;
    } else {
        double sum = 0.0, zpow = 1.0;
        for (int k = 2; k <= 14; ++k) {
            sum += zpow * phi_d[k];
            zpow *= z;
        }
        c.K = dt * dt * sum;
    }
    c.g_d = dt * phi_d[1];
    return c;
}

/// Exact flow of the scalar tube dynamics over [0, dt] for constant input
/// norms: scalar exponentials for s, variation of constants for delta. No
/// discretization error beyond rounding.
inline TubeState propagate_interval(const TubeParams& params, const TubeState& state0,
                                    const InputNorms& nu, double dt) {
    state0.validate();
    const TubeStepCoeffs c = tube_step_coeffs(params, dt);
    const double cs = params.s_forcing(nu);
    const double cd = params.delta_forcing();
    TubeState out;
    out.s = c.e_s * state0.s + c.g_s * cs;
    out.delta = c.e_d * state0.delta + params.L_fnl * (c.psi * state0.s + c.K * cs) +
                c.g_d * cd;
    // Clamp tiny negative rounding; the exact flow preserves nonnegativity.
    out.s = std::max(out.s, 0.0);
    out.delta = std::max(out.delta, 0.0);
    return out;
}

}  // namespace rompc
