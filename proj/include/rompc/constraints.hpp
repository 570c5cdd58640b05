#pragma once

#include "rompc/ssm.hpp"

namespace rompc {

/// Polytopic output constraints {y : G y <= g}. Each row is the affine
/// constraint h_j(y) = G_j y - g_j with Lipschitz constant ||G_j||.
struct PolytopicConstraints {
    Matrix G;  // n_h x n_y
    Vector g;  // n_h

    int rows() const { return static_cast<int>(g.size()); }
    double row_lipschitz(int j) const { return G.row(j).norm(); }

    void validate() const {
        require(G.rows() == g.size() && G.rows() >= 1, "PolytopicConstraints: shape mismatch");
    }

    double value(const Vector& y, int j) const {
        return G.row(j).dot(y) - g[j];
    }
    double max_value(const Vector& y) const {
        return (G * y - g).maxCoeff();
    }
};

/// Tightened constraint value for row j at prediction z_r with tube radii
/// (delta, s):  G_j C w(z_r) - g_j + ||G_j|| L_Cw delta + ||G_j|| ||C|| s.
/// Nonpositive value means the tightened constraint holds.
inline double tightened_value(const PolytopicConstraints& cons, const SsmRom& rom,
                              const Vector& z_r, double delta, double s, int j) {
    if (j < 0 || j >= cons.rows()) {
        throw std::out_of_range("tightened_value: constraint row index out of range");
    }
    require(delta >= 0.0 && s >= 0.0, "tightened_value: tube radii must be nonnegative");
    const Vector y = rom.C * lift(rom, z_r);
    const double lh = cons.row_lipschitz(j);
    return cons.value(y, j) + lh * rom.constants.L_Cw * delta + lh * rom.c_norm() * s;
}

inline double max_tightened_value(const PolytopicConstraints& cons, const SsmRom& rom,
                                  const Vector& z_r, double delta, double s) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < cons.rows(); ++j) {
        worst = std::max(worst, tightened_value(cons, rom, z_r, delta, s, j));
    }
    return worst;
}

/// Sampling check of the footnote requirement that the constraint set meets
/// the image of the manifold: some lifted output must satisfy all rows.
inline bool constraints_meet_manifold(const PolytopicConstraints& cons, const SsmRom& rom,
                                      int n_samples, std::uint64_t seed) {
    auto rng = make_rng(seed);
    if (cons.max_value(rom.C * lift(rom, Vector::Zero(rom.n))) <= 0.0) return true;
    for (int i = 0; i < n_samples; ++i) {
        const Vector x_r = ball_sample(rng, rom.n, rom.domain_radius);
        if (cons.max_value(rom.C * lift(rom, x_r)) <= 0.0) return true;
    }
    return false;
}

}  // namespace rompc
