#pragma once

#include <vector>

#include "dnnsr/network_params.hpp"
#include "dnnsr/numeric.hpp"

namespace dnnsr {

/// Elementwise activation value.
Matrix activate(Activation a, const Matrix& pre);
/// Elementwise derivative, given the pre-activation and the already computed value.
Matrix activation_derivative(Activation a, const Matrix& pre, const Matrix& value);

/// Everything retained by a forward pass over n input columns.
struct ForwardTrace {
    std::vector<Matrix> pre_activations;  ///< W^(j) Z^(j-1) + b^(j), j = 1..l+1
    std::vector<Matrix> hidden_outputs;   ///< Z^(i), d_i x n, i = 1..l
    Matrix output;                        ///< reconstruction, d_0 x n
};

/// Forward pass. Columns of x are samples; missing entries are expected to be zero.
/// Throws ShapeError when x.rows() != d_0.
ForwardTrace forward(const NetworkParams& params, const Matrix& x);

/// Network output only, without retaining intermediates.
Matrix predict(const NetworkParams& params, const Matrix& x);

/// Slack variables of the penalty formulation: h[i] shadows hidden output Z^(i+1)
/// (d x n) and v[j] shadows weight W^(j+1).
struct AuxState {
    std::vector<Matrix> h;
    std::vector<Matrix> v;
};

/// h = Z, V = W: every coupling penalty vanishes.
AuxState anchored_aux(const NetworkParams& params, const ForwardTrace& trace);

/// Penalty parameters of the smooth part. An infinite mu switches the
/// corresponding coupling term off (weight 1/mu = 0).
struct PenaltyWeights {
    std::vector<double> mu_h;  ///< one per hidden layer
    std::vector<double> mu_v;  ///< one per weight matrix
    double lambda = 0.0;       ///< Frobenius weight decay

    /// Uniform weights for a network with `hidden` hidden layers.
    static PenaltyWeights uniform(std::size_t hidden, double mu, double lambda);
};

/// The four nonnegative parts of the smooth objective
///   g = ||N o (X - Xhat)||_F^2 + lambda sum ||W||_F^2
///       + sum_i ||Z^(i) - H^(i)||_F^2 / (2 mu_h_i) + sum_j ||W^(j) - V^(j)||_F^2 / (2 mu_v_j).
struct SmoothObjectiveParts {
    double masked_loss = 0.0;
    double frob_reg = 0.0;
    double h_penalty = 0.0;
    double v_penalty = 0.0;

    double total() const { return masked_loss + frob_reg + h_penalty + v_penalty; }
};

/// Evaluates g. `x` is both the (zero-filled) network input and the target on the mask.
SmoothObjectiveParts smooth_objective(const NetworkParams& params, const Matrix& x, const Matrix& mask,
                                      const AuxState& aux, const PenaltyWeights& weights);

/// Same, reusing a trace already computed for `params` on `x`.
SmoothObjectiveParts smooth_objective(const NetworkParams& params, const ForwardTrace& trace, const Matrix& x,
                                      const Matrix& mask, const AuxState& aux, const PenaltyWeights& weights);

struct ValueAndGradient {
    SmoothObjectiveParts value;
    Vector gradient;  ///< in flatten() order
};

/// g and its exact gradient with respect to theta, by backpropagation.
ValueAndGradient value_and_grad_theta(const NetworkParams& params, const Matrix& x, const Matrix& mask,
                                      const AuxState& aux, const PenaltyWeights& weights);

inline Vector grad_theta(const NetworkParams& params, const Matrix& x, const Matrix& mask, const AuxState& aux,
                         const PenaltyWeights& weights) {
    return value_and_grad_theta(params, x, mask, aux, weights).gradient;
}

}  // namespace dnnsr
