#include "dnnsr/numeric.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/SVD>

#include "dnnsr/errors.hpp"

namespace dnnsr {

Matrix make_matrix(Index rows, Index cols, std::span<const double> row_major) {
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != row_major.size()) {
        throw ShapeError("make_matrix: expected " + std::to_string(rows * cols) + " entries, got " +
                         std::to_string(row_major.size()));
    }
    Matrix a(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            const double v = row_major[static_cast<std::size_t>(i * cols + j)];
            if (!std::isfinite(v)) throw ArgumentError("make_matrix: non-finite entry");
            a(i, j) = v;
        }
    }
    return a;
}

bool all_finite(const Matrix& a) { return a.allFinite(); }

Matrix Svd::reconstruct() const { return u * singular_values.asDiagonal() * vt; }

Svd svd(const Matrix& a) {
    if (a.size() == 0) throw ArgumentError("svd: empty matrix");
    if (!a.allFinite()) throw ArgumentError("svd: non-finite input");

    Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success) throw NumericalFailure("svd: decomposition did not converge");

    Svd out{dec.matrixU(), dec.singularValues(), dec.matrixV().transpose()};
    for (Index j = 0; j < out.u.cols(); ++j) {
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < out.u.rows(); ++i) {
            const double m = std::abs(out.u(i, j));
            if (m > best) {
                best = m;
                arg = i;
            }
        }
        if (out.u(arg, j) < 0.0) {
            out.u.col(j) *= -1.0;
            out.vt.row(j) *= -1.0;
        }
    }
    return out;
}

double nuclear_norm(const Matrix& a) {
    if (a.size() == 0 || a.isZero(0.0)) return 0.0;
    return svd(a).singular_values.sum();
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw ArgumentError("Rng::below: n must be positive");
    if ((n & (n - 1)) == 0) return engine_() & (n - 1);
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

Matrix Rng::normal_matrix(Index rows, Index cols) {
    Matrix a(rows, cols);
    // Column-major fill order, matching Eigen storage.
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) a(i, j) = normal();
    return a;
}

Matrix Rng::uniform_matrix(Index rows, Index cols, double lo, double hi) {
    Matrix a(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) a(i, j) = uniform(lo, hi);
    return a;
}

}  // namespace dnnsr
