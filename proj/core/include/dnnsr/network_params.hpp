#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dnnsr/numeric.hpp"

namespace dnnsr {

/// Elementwise activations. All are twice continuously differentiable.
enum class Activation {
    tanh,
    sigmoid,
    softplus,
    scaled_tanh,  ///< 1.71 * tanh(2/3 x)
    identity,
};

std::string_view to_string(Activation a);
std::optional<Activation> parse_activation(std::string_view name);

/// Layer widths d_0 .. d_{l+1} plus the activation used by the hidden layers and
/// by the output layer. Autoencoder shape: d_0 == d_{l+1}.
struct NetworkShape {
    std::vector<Index> layer_dims;
    Activation hidden_activation = Activation::tanh;
    Activation output_activation = Activation::identity;

    /// Throws ShapeError unless there are >= 2 positive widths with d_0 == d_{l+1}.
    void validate() const;

    std::size_t num_layers() const { return layer_dims.empty() ? 0 : layer_dims.size() - 1; }
    std::size_t num_hidden() const { return num_layers() == 0 ? 0 : num_layers() - 1; }
    /// sum_j d_j * d_{j-1} + d_j
    Index parameter_count() const;
    Activation activation_of(std::size_t layer) const {
        return layer + 1 == num_layers() ? output_activation : hidden_activation;
    }

    bool operator==(const NetworkShape&) const = default;
};

/// Weights W^(j) (d_j x d_{j-1}) and biases b^(j) (d_j) for j = 1..l+1, stored 0-based.
struct NetworkParams {
    NetworkShape shape;
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    /// All-zero parameters of the given shape.
    static NetworkParams zeros(const NetworkShape& shape);

    /// Throws ShapeError if weights/biases disagree with the shape.
    void validate() const;

    bool operator==(const NetworkParams& other) const;
};

/// theta = [vec(W^(1)) .. vec(W^(l+1)), b^(1) .. b^(l+1)], vec() stacking columns.
Vector flatten(const NetworkParams& params);

/// Inverse of flatten. Throws ShapeError when theta.size() != shape.parameter_count().
NetworkParams unflatten(std::span<const double> theta, const NetworkShape& shape);
inline NetworkParams unflatten(const Vector& theta, const NetworkShape& shape) {
    return unflatten(std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())), shape);
}

/// Weights uniform on [-a, a], a = sqrt(6 / (d_in + d_out)); biases zero.
NetworkParams init_network(const NetworkShape& shape, Rng& rng);

}  // namespace dnnsr
