#include "dnnsr/prox.hpp"

#include <algorithm>
#include <cmath>

#include "dnnsr/errors.hpp"

namespace dnnsr::prox {
namespace {

double shrink(double v, double t) {
    const double mag = std::abs(v) - t;
    if (mag <= 0.0) return 0.0;
    return std::copysign(mag, v);
}

void check_threshold(double t, const char* what) {
    if (!(t >= 0.0)) throw ArgumentError(std::string(what) + ": threshold must be nonnegative");
}

}  // namespace

Vector soft_threshold(const Vector& x, double t) {
    check_threshold(t, "soft_threshold");
    return x.unaryExpr([t](double v) { return shrink(v, t); });
}

Matrix soft_threshold(const Matrix& x, double t) {
    check_threshold(t, "soft_threshold");
    return x.unaryExpr([t](double v) { return shrink(v, t); });
}

Matrix svt(const Matrix& w, double tau) {
    check_threshold(tau, "svt");
    if (w.size() == 0) return w;
    if (!w.allFinite()) throw ArgumentError("svt: non-finite input");
    if (tau > 0.0 && tau >= w.norm()) return Matrix::Zero(w.rows(), w.cols());

    const Svd dec = svd(w);
    const Vector shrunk = (dec.singular_values.array() - tau).max(0.0).matrix();
    Index rank = 0;
    while (rank < shrunk.size() && shrunk[rank] > 0.0) ++rank;
    if (rank == 0) return Matrix::Zero(w.rows(), w.cols());
    return dec.u.leftCols(rank) * shrunk.head(rank).asDiagonal() * dec.vt.topRows(rank);
}

Vector clip_linf(const Vector& theta, double m) {
    if (!(m > 0.0)) throw ArgumentError("clip_linf: bound must be positive");
    return theta.cwiseMax(-m).cwiseMin(m);
}

}  // namespace dnnsr::prox
