#include "dnnsr/network_params.hpp"

#include <cmath>
#include <cstring>

#include "dnnsr/errors.hpp"

namespace dnnsr {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::softplus: return "softplus";
        case Activation::scaled_tanh: return "scaled_tanh";
        case Activation::identity: return "identity";
    }
    return "unknown";
}

std::optional<Activation> parse_activation(std::string_view name) {
    for (Activation a : {Activation::tanh, Activation::sigmoid, Activation::softplus,
                         Activation::scaled_tanh, Activation::identity}) {
        if (to_string(a) == name) return a;
    }
    return std::nullopt;
}

void NetworkShape::validate() const {
    if (layer_dims.size() < 2) throw ShapeError("network needs at least input and output widths");
    for (Index d : layer_dims) {
        if (d <= 0) throw ShapeError("layer widths must be positive");
    }
    if (layer_dims.front() != layer_dims.back()) {
        throw ShapeError("autoencoder input width " + std::to_string(layer_dims.front()) +
                         " differs from output width " + std::to_string(layer_dims.back()));
    }
}

Index NetworkShape::parameter_count() const {
    Index total = 0;
    for (std::size_t j = 1; j < layer_dims.size(); ++j) total += layer_dims[j] * layer_dims[j - 1] + layer_dims[j];
    return total;
}

NetworkParams NetworkParams::zeros(const NetworkShape& shape) {
    shape.validate();
    NetworkParams p{shape, {}, {}};
    for (std::size_t j = 1; j < shape.layer_dims.size(); ++j) {
        p.weights.push_back(Matrix::Zero(shape.layer_dims[j], shape.layer_dims[j - 1]));
        p.biases.push_back(Vector::Zero(shape.layer_dims[j]));
    }
    return p;
}

void NetworkParams::validate() const {
    shape.validate();
    const std::size_t layers = shape.num_layers();
    if (weights.size() != layers || biases.size() != layers) {
        throw ShapeError("parameter count does not match layer_dims");
    }
    for (std::size_t j = 0; j < layers; ++j) {
        if (weights[j].rows() != shape.layer_dims[j + 1] || weights[j].cols() != shape.layer_dims[j] ||
            biases[j].size() != shape.layer_dims[j + 1]) {
            throw ShapeError("layer " + std::to_string(j + 1) + " parameters have the wrong shape");
        }
    }
}

bool NetworkParams::operator==(const NetworkParams& other) const {
    if (!(shape == other.shape) || weights.size() != other.weights.size() || biases.size() != other.biases.size()) {
        return false;
    }
    // Bitwise comparison: -0.0 vs 0.0 and NaN payloads count as differences.
    auto same = [](const double* a, const double* b, Index n) {
        return std::memcmp(a, b, static_cast<std::size_t>(n) * sizeof(double)) == 0;
    };
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (weights[j].rows() != other.weights[j].rows() || weights[j].cols() != other.weights[j].cols() ||
            !same(weights[j].data(), other.weights[j].data(), weights[j].size())) {
            return false;
        }
        if (biases[j].size() != other.biases[j].size() ||
            !same(biases[j].data(), other.biases[j].data(), biases[j].size())) {
            return false;
        }
    }
    return true;
}

Vector flatten(const NetworkParams& params) {
    params.validate();
    Vector theta(params.shape.parameter_count());
    Index offset = 0;
    // Eigen storage is column-major, so the raw buffer is already vec(W).
    for (const Matrix& w : params.weights) {
        theta.segment(offset, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
        offset += w.size();
    }
    for (const Vector& b : params.biases) {
        theta.segment(offset, b.size()) = b;
        offset += b.size();
    }
    return theta;
}

NetworkParams unflatten(std::span<const double> theta, const NetworkShape& shape) {
    shape.validate();
    if (static_cast<Index>(theta.size()) != shape.parameter_count()) {
        throw ShapeError("unflatten: theta has " + std::to_string(theta.size()) + " entries, shape needs " +
                         std::to_string(shape.parameter_count()));
    }
    NetworkParams p = NetworkParams::zeros(shape);
    const double* cursor = theta.data();
    for (Matrix& w : p.weights) {
        std::memcpy(w.data(), cursor, static_cast<std::size_t>(w.size()) * sizeof(double));
        cursor += w.size();
    }
    for (Vector& b : p.biases) {
        std::memcpy(b.data(), cursor, static_cast<std::size_t>(b.size()) * sizeof(double));
        cursor += b.size();
    }
    return p;
}

NetworkParams init_network(const NetworkShape& shape, Rng& rng) {
    NetworkParams p = NetworkParams::zeros(shape);
    for (Matrix& w : p.weights) {
        const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        w = rng.uniform_matrix(w.rows(), w.cols(), -a, a);
    }
    return p;
}

}  // namespace dnnsr
