#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Core>

namespace dnnsr {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Builds a rows x cols matrix from row-major entries.
/// Throws ShapeError on a length mismatch and ArgumentError on non-finite entries.
Matrix make_matrix(Index rows, Index cols, std::span<const double> row_major);

bool all_finite(const Matrix& a);

/// Thin singular value decomposition a = u * diag(singular_values) * vt.
///
/// With r = min(rows, cols): u is rows x r, vt is r x cols, singular values are
/// nonincreasing and nonnegative. Signs are canonical: the largest-magnitude entry
/// of every left singular vector is nonnegative (first such entry on ties).
struct Svd {
    Matrix u;
    Vector singular_values;
    Matrix vt;

    Matrix reconstruct() const;
};

/// Throws ArgumentError for empty/non-finite input, NumericalFailure if the
/// bidiagonal divide-and-conquer iteration does not converge.
Svd svd(const Matrix& a);

double nuclear_norm(const Matrix& a);

/// Seeded pseudo-random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are implementation-defined, so the
/// conversions below are written out explicitly:
///   uniform(): top 53 bits of one draw scaled by 2^-53, in [0, 1).
///   normal():  Box-Muller on two uniforms, both outputs used in turn.
///   below(n):  rejection sampling on the top bits, unbiased.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    Matrix normal_matrix(Index rows, Index cols);
    Matrix uniform_matrix(Index rows, Index cols, double lo, double hi);

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dnnsr
