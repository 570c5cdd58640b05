#pragma once

#include "rompc/core.hpp"

#include <complex>
#include <sstream>

namespace rompc {

/// One real modal block of the linear part: either a scalar real mode or a
/// rotational pair expanding to [[decay, freq], [-freq, decay]].
struct ModalBlock {
    enum class Kind { ScalarReal, RotationalPair };

    Kind kind = Kind::ScalarReal;
    double decay = -1.0;      // real part of the eigenvalue(s), 1/s; must be < 0
    double frequency = 0.0;   // imaginary part, rad/s; zero for scalar blocks

    int dim() const { return kind == Kind::ScalarReal ? 1 : 2; }

    static ModalBlock scalar(double decay) { return {Kind::ScalarReal, decay, 0.0}; }
    static ModalBlock pair(double decay, double frequency) {
        return {Kind::RotationalPair, decay, frequency};
    }
};

inline int total_dim(const std::vector<ModalBlock>& blocks) {
    int n = 0;
    for (const auto& b : blocks) n += b.dim();
    return n;
}

/// Assembles the block-diagonal real modal matrix. Blocks must be Hurwitz.
inline Matrix assemble_A(const std::vector<ModalBlock>& blocks) {
    require(!blocks.empty(), "assemble_A: block list is empty");
    for (const auto& b : blocks) {
        if (!(b.decay < 0.0)) {
            std::ostringstream oss;
            oss << "assemble_A: block with decay " << b.decay << " is not Hurwitz";
            throw std::invalid_argument(oss.str());
        }
    }
    const int n = total_dim(blocks);
    Matrix A = Matrix::Zero(n, n);
    int at = 0;
    for (const auto& b : blocks) {
        if (b.kind == ModalBlock::Kind::ScalarReal) {
            A(at, at) = b.decay;
        } else {
            A(at, at) = b.decay;
            A(at, at + 1) = b.frequency;
            A(at + 1, at) = -b.frequency;
            A(at + 1, at + 1) = b.decay;
        }
        at += b.dim();
    }
    return A;
}

/// Block-diagonal product A*x without forming A.
inline Vector apply_modal(const std::vector<ModalBlock>& blocks, const Vector& x) {
    Vector y(x.size());
    int at = 0;
    for (const auto& b : blocks) {
        if (b.kind == ModalBlock::Kind::ScalarReal) {
            y[at] = b.decay * x[at];
        } else {
            y[at] = b.decay * x[at] + b.frequency * x[at + 1];
            y[at + 1] = -b.frequency * x[at] + b.decay * x[at + 1];
        }
        at += b.dim();
    }
    return y;
}

inline std::vector<std::complex<double>> spectrum(const std::vector<ModalBlock>& blocks) {
    std::vector<std::complex<double>> eig;
    for (const auto& b : blocks) {
        if (b.kind == ModalBlock::Kind::ScalarReal) {
            eig.emplace_back(b.decay, 0.0);
        } else {
            eig.emplace_back(b.decay, b.frequency);
            eig.emplace_back(b.decay, -b.frequency);
        }
    }
    return eig;
}

/// An outer eigenvalue matching an integer combination of inner eigenvalues.
struct ResonanceHit {
    std::complex<double> outer;
    std::vector<int> multiplicity;  // per inner eigenvalue, sum in [2, max_order]
    std::complex<double> combination;
};

namespace detail {
inline void resonance_scan(const std::vector<std::complex<double>>& inner,
                           const std::complex<double>& outer, int max_order, double tol,
                           std::size_t from, int order_left, std::complex<double> acc,
                           std::vector<int>& mult, std::vector<ResonanceHit>& hits) {
    const int used = max_order - order_left;
    if (used >= 2 && std::abs(acc - outer) <= tol) {
        hits.push_back({outer, mult, acc});
    }
    if (order_left == 0 || from >= inner.size()) return;
    for (std::size_t i = from; i < inner.size(); ++i) {
        mult[i] += 1;
        resonance_scan(inner, outer, max_order, tol, i, order_left - 1, acc + inner[i], mult,
                       hits);
        mult[i] -= 1;
    }
}
}  // namespace detail

/// Finds every outer eigenvalue equal (within tol) to an integer combination
/// of inner eigenvalues with total order in [2, max_order].
inline std::vector<ResonanceHit> find_resonances(
    const std::vector<std::complex<double>>& inner,
    const std::vector<std::complex<double>>& outer, int max_order, double tol) {
    std::vector<ResonanceHit> hits;
    std::vector<int> mult(inner.size(), 0);
    for (const auto& lam : outer) {
        detail::resonance_scan(inner, lam, max_order, tol, 0, max_order, {0.0, 0.0}, mult,
                               hits);
    }
    return hits;
}

}  // namespace rompc
