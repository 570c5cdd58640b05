#pragma once

#include "rompc/core.hpp"

#include <numeric>

namespace rompc {

/// Multivariate monomial basis of all total degrees in [deg_min, deg_max],
/// enumerated in graded lexicographic order. The order is part of the
/// serialization contract: coefficient tables are stored against it.
class MonomialBasis {
public:
    MonomialBasis() = default;

    MonomialBasis(int input_dim, int deg_min, int deg_max)
        : input_dim_(input_dim), deg_min_(deg_min), deg_max_(deg_max) {
        require(input_dim >= 1, "MonomialBasis: input_dim must be >= 1");
        require(deg_min >= 2, "MonomialBasis: minimum total degree must be >= 2");
        require(deg_max >= deg_min, "MonomialBasis: degree range is empty");
        std::vector<int> expo(input_dim, 0);
        for (int d = deg_min; d <= deg_max; ++d) enumerate(d, 0, d, expo);
    }

    int size() const { return static_cast<int>(exponents_.size()); }
    int input_dim() const { return input_dim_; }
    int deg_min() const { return deg_min_; }
    int deg_max() const { return deg_max_; }
    const std::vector<int>& exponent(int k) const { return exponents_[k]; }

    /// Values of all monomials at x.
    Vector eval(const Vector& x) const {
        const Matrix pow = power_table(x);
        Vector m(size());
        for (int k = 0; k < size(); ++k) {
            double v = 1.0;
            for (int j = 0; j < input_dim_; ++j) v *= pow(j, exponents_[k][j]);
            m[k] = v;
        }
        return m;
    }

    /// Gradients of all monomials at x: (size x input_dim).
    Matrix eval_gradients(const Vector& x) const {
        const Matrix pow = power_table(x);
        Matrix g = Matrix::Zero(size(), input_dim_);
        for (int k = 0; k < size(); ++k) {
            const auto& e = exponents_[k];
            for (int j = 0; j < input_dim_; ++j) {
                if (e[j] == 0) continue;
                double v = static_cast<double>(e[j]) * pow(j, e[j] - 1);
                for (int l = 0; l < input_dim_; ++l) {
                    if (l != j) v *= pow(l, e[l]);
                }
                g(k, j) = v;
            }
        }
        return g;
    }

private:
    void enumerate(int remaining, int var, int total, std::vector<int>& expo) {
        if (var == input_dim_ - 1) {
            expo[var] = remaining;
            exponents_.push_back(expo);
            expo[var] = 0;
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            expo[var] = e;
            enumerate(remaining - e, var + 1, total, expo);
        }
        expo[var] = 0;
    }

    Matrix power_table(const Vector& x) const {
        require(x.size() == input_dim_, "MonomialBasis: input dimension mismatch");
        Matrix pow(input_dim_, deg_max_ + 1);
        for (int j = 0; j < input_dim_; ++j) {
            pow(j, 0) = 1.0;
            for (int d = 1; d <= deg_max_; ++d) pow(j, d) = pow(j, d - 1) * x[j];
        }
        return pow;
    }

    int input_dim_ = 0;
    int deg_min_ = 2;
    int deg_max_ = 2;
    std::vector<std::vector<int>> exponents_;
};

/// Polynomial vector field with no constant and no linear part: every
/// monomial has total degree >= 2, so p(0) = 0 and p'(0) = 0 hold
/// structurally. Coefficients are dense against the graded-lex basis.
class PolynomialMap {
public:
    PolynomialMap() = default;

    PolynomialMap(int input_dim, int output_dim, int deg_min, int deg_max)
        : basis_(input_dim, deg_min, deg_max),
          output_dim_(output_dim),
          coeffs_(Matrix::Zero(output_dim, basis_.size())) {
        require(output_dim >= 1, "PolynomialMap: output_dim must be >= 1");
    }

    static PolynomialMap zero(int input_dim, int output_dim) {
        return PolynomialMap(input_dim, output_dim, 2, 2);
    }

    int input_dim() const { return basis_.input_dim(); }
    int output_dim() const { return output_dim_; }
    const MonomialBasis& basis() const { return basis_; }
    const Matrix& coefficients() const { return coeffs_; }
    Matrix& coefficients() { return coeffs_; }

    void set_coefficients(const Matrix& c) {
        require(c.rows() == output_dim_ && c.cols() == basis_.size(),
                "PolynomialMap: coefficient table has wrong shape");
        coeffs_ = c;
    }

    bool is_zero() const { return coeffs_.cwiseAbs().maxCoeff() == 0.0; }

    Vector eval(const Vector& x) const { return coeffs_ * basis_.eval(x); }

    /// Jacobian dp/dx at x: (output_dim x input_dim).
    Matrix jacobian(const Vector& x) const { return coeffs_ * basis_.eval_gradients(x); }

    /// Largest Jacobian operator 2-norm over the given sample points.
    double max_jacobian_norm(const std::vector<Vector>& samples) const {
        double best = 0.0;
        for (const auto& x : samples) {
            Eigen::JacobiSVD<Matrix> svd(jacobian(x));
            best = std::max(best, svd.singularValues()[0]);
        }
        return best;
    }

private:
    MonomialBasis basis_;
    int output_dim_ = 0;
    Matrix coeffs_;
};

}  // namespace rompc
