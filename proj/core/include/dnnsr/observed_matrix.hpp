#pragma once

#include "dnnsr/numeric.hpp"

namespace dnnsr {

/// Partially observed matrix: data is zero wherever mask is zero, mask is 0/1.
struct ObservedMatrix {
    Matrix data;
    Matrix mask;

    /// Zeroes data outside the mask. Throws ShapeError on mismatched shapes and
    /// ValidationError on mask entries other than 0/1 or non-finite data.
    static ObservedMatrix from(Matrix data, Matrix mask);
    /// Fully observed.
    static ObservedMatrix full(Matrix data);

    Index rows() const { return data.rows(); }
    Index cols() const { return data.cols(); }
    Index omega_count() const;
    Index missing_count() const { return data.size() - omega_count(); }

    /// Throws if any invariant is broken.
    void validate() const;
};

}  // namespace dnnsr
