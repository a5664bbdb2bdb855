#include "dnnsr/observed_matrix.hpp"

#include "dnnsr/errors.hpp"

namespace dnnsr {

ObservedMatrix ObservedMatrix::from(Matrix data, Matrix mask) {
    if (data.rows() != mask.rows() || data.cols() != mask.cols()) throw ShapeError("mask shape differs from data");
    ObservedMatrix out{std::move(data), std::move(mask)};
    if (!out.data.allFinite()) throw ValidationError("observed data contains non-finite values");
    for (Index k = 0; k < out.mask.size(); ++k) {
        const double m = out.mask.data()[k];
        if (m != 0.0 && m != 1.0) throw ValidationError("mask entries must be 0 or 1");
        if (m == 0.0) out.data.data()[k] = 0.0;
    }
    return out;
}

ObservedMatrix ObservedMatrix::full(Matrix data) {
    Matrix mask = Matrix::Ones(data.rows(), data.cols());
    return from(std::move(data), std::move(mask));
}

Index ObservedMatrix::omega_count() const {
    return static_cast<Index>(mask.sum());
}

void ObservedMatrix::validate() const {
    if (data.rows() != mask.rows() || data.cols() != mask.cols()) throw ShapeError("mask shape differs from data");
    for (Index k = 0; k < mask.size(); ++k) {
        const double m = mask.data()[k];
        if (m != 0.0 && m != 1.0) throw ValidationError("mask entries must be 0 or 1");
        if (m == 0.0 && data.data()[k] != 0.0) throw ValidationError("data must be zero outside the mask");
    }
}

}  // namespace dnnsr
