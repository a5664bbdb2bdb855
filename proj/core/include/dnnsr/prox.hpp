#pragma once

#include "dnnsr/numeric.hpp"

namespace dnnsr::prox {

/// Proximal operator of t * ||.||_1: sign(x) * max(|x| - t, 0) elementwise.
/// Entries with |x| == t map to 0. Throws ArgumentError if t < 0.
Vector soft_threshold(const Vector& x, double t);
Matrix soft_threshold(const Matrix& x, double t);

/// Singular value thresholding, the proximal operator of tau * ||.||_*:
/// U diag(max(sigma - tau, 0)) V^T. Throws ArgumentError if tau < 0.
///
/// When tau >= ||w||_F every singular value is annihilated and the SVD is skipped.
Matrix svt(const Matrix& w, double tau);

/// Projection onto the l-infinity ball of radius m (the proximal operator of its
/// indicator). Throws ArgumentError unless m > 0.
Vector clip_linf(const Vector& theta, double m);

}  // namespace dnnsr::prox
