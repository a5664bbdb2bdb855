#include "dnnsr/fcnn.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dnnsr/errors.hpp"

namespace dnnsr {
namespace {

constexpr double kScaledTanhAmp = 1.71;
constexpr double kScaledTanhSlope = 2.0 / 3.0;

double softplus(double a) { return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }

double logistic(double a) {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

double inverse_mu(double mu) {
    if (std::isinf(mu)) return 0.0;
    if (!(mu > 0.0)) throw ArgumentError("penalty parameter mu must be positive");
    return 1.0 / mu;
}

void check_inputs(const NetworkParams& params, const Matrix& x, const Matrix& mask) {
    if (x.rows() != params.shape.layer_dims.front()) {
        throw ShapeError("input has " + std::to_string(x.rows()) + " rows, network expects " +
                         std::to_string(params.shape.layer_dims.front()));
    }
    if (mask.rows() != x.rows() || mask.cols() != x.cols()) throw ShapeError("mask shape differs from data");
}

void check_aux(const NetworkParams& params, Index n, const AuxState& aux, const PenaltyWeights& w) {
    const std::size_t hidden = params.shape.num_hidden();
    const std::size_t layers = params.shape.num_layers();
    if (aux.h.size() != hidden || aux.v.size() != layers) throw ShapeError("aux state does not match network depth");
    if (w.mu_h.size() != hidden || w.mu_v.size() != layers) {
        throw ShapeError("penalty weights do not match network depth");
    }
    for (std::size_t i = 0; i < hidden; ++i) {
        if (aux.h[i].rows() != params.shape.layer_dims[i + 1] || aux.h[i].cols() != n) {
            throw ShapeError("aux h for hidden layer " + std::to_string(i + 1) + " has the wrong shape");
        }
    }
    for (std::size_t j = 0; j < layers; ++j) {
        if (aux.v[j].rows() != params.weights[j].rows() || aux.v[j].cols() != params.weights[j].cols()) {
            throw ShapeError("aux V for layer " + std::to_string(j + 1) + " has the wrong shape");
        }
    }
}

}  // namespace

Matrix activate(Activation a, const Matrix& pre) {
    switch (a) {
        case Activation::tanh: return pre.array().tanh().matrix();
        case Activation::sigmoid: return pre.unaryExpr(&logistic);
        case Activation::softplus: return pre.unaryExpr(&softplus);
        case Activation::scaled_tanh: return (kScaledTanhAmp * (kScaledTanhSlope * pre.array()).tanh()).matrix();
        case Activation::identity: return pre;
    }
    throw ArgumentError("unknown activation");
}

Matrix activation_derivative(Activation a, const Matrix& pre, const Matrix& value) {
    switch (a) {
        case Activation::tanh: return (1.0 - value.array().square()).matrix();
        case Activation::sigmoid: return (value.array() * (1.0 - value.array())).matrix();
        case Activation::softplus: return pre.unaryExpr(&logistic);
        case Activation::scaled_tanh: {
            const auto t = value.array() / kScaledTanhAmp;
            return (kScaledTanhAmp * kScaledTanhSlope * (1.0 - t.square())).matrix();
        }
        case Activation::identity: return Matrix::Ones(pre.rows(), pre.cols());
    }
    throw ArgumentError("unknown activation");
}

ForwardTrace forward(const NetworkParams& params, const Matrix& x) {
    params.validate();
    if (x.rows() != params.shape.layer_dims.front()) {
        throw ShapeError("input has " + std::to_string(x.rows()) + " rows, network expects " +
                         std::to_string(params.shape.layer_dims.front()));
    }
    const std::size_t layers = params.shape.num_layers();
    ForwardTrace trace;
    trace.pre_activations.reserve(layers);
    trace.hidden_outputs.reserve(layers - 1);
    const Matrix* input = &x;
    for (std::size_t j = 0; j < layers; ++j) {
        Matrix pre = params.weights[j] * (*input);
        pre.colwise() += params.biases[j];
        Matrix out = activate(params.shape.activation_of(j), pre);
        trace.pre_activations.push_back(std::move(pre));
        if (j + 1 < layers) {
            trace.hidden_outputs.push_back(std::move(out));
            input = &trace.hidden_outputs.back();
        } else {
            trace.output = std::move(out);
        }
    }
    return trace;
}

Matrix predict(const NetworkParams& params, const Matrix& x) {
    params.validate();
    if (x.rows() != params.shape.layer_dims.front()) throw ShapeError("input row count differs from network width");
    Matrix current = x;
    for (std::size_t j = 0; j < params.shape.num_layers(); ++j) {
        Matrix pre = params.weights[j] * current;
        pre.colwise() += params.biases[j];
        current = activate(params.shape.activation_of(j), pre);
    }
    return current;
}

AuxState anchored_aux(const NetworkParams& params, const ForwardTrace& trace) {
    return AuxState{trace.hidden_outputs, params.weights};
}

PenaltyWeights PenaltyWeights::uniform(std::size_t hidden, double mu, double lambda) {
    return PenaltyWeights{std::vector<double>(hidden, mu), std::vector<double>(hidden + 1, mu), lambda};
}

SmoothObjectiveParts smooth_objective(const NetworkParams& params, const Matrix& x, const Matrix& mask,
                                      const AuxState& aux, const PenaltyWeights& weights) {
    check_inputs(params, x, mask);
    return smooth_objective(params, forward(params, x), x, mask, aux, weights);
}

SmoothObjectiveParts smooth_objective(const NetworkParams& params, const ForwardTrace& trace, const Matrix& x,
                                      const Matrix& mask, const AuxState& aux, const PenaltyWeights& weights) {
    check_inputs(params, x, mask);
    check_aux(params, x.cols(), aux, weights);
    SmoothObjectiveParts parts;
    parts.masked_loss = mask.cwiseProduct(trace.output - x).squaredNorm();
    for (const Matrix& w : params.weights) parts.frob_reg += w.squaredNorm();
    parts.frob_reg *= weights.lambda;
    for (std::size_t i = 0; i < aux.h.size(); ++i) {
        const double inv = inverse_mu(weights.mu_h[i]);
        if (inv != 0.0) parts.h_penalty += 0.5 * inv * (trace.hidden_outputs[i] - aux.h[i]).squaredNorm();
    }
    for (std::size_t j = 0; j < aux.v.size(); ++j) {
        const double inv = inverse_mu(weights.mu_v[j]);
        if (inv != 0.0) parts.v_penalty += 0.5 * inv * (params.weights[j] - aux.v[j]).squaredNorm();
    }
    return parts;
}

ValueAndGradient value_and_grad_theta(const NetworkParams& params, const Matrix& x, const Matrix& mask,
                                      const AuxState& aux, const PenaltyWeights& weights) {
    check_inputs(params, x, mask);
    const ForwardTrace trace = forward(params, x);
    ValueAndGradient out;
    out.value = smooth_objective(params, trace, x, mask, aux, weights);

    const std::size_t layers = params.shape.num_layers();
    std::vector<Matrix> grad_w(layers);
    std::vector<Vector> grad_b(layers);

    // d g / d output
    Matrix upstream = 2.0 * mask.cwiseProduct(trace.output - x);
    for (std::size_t jj = layers; jj-- > 0;) {
        if (jj + 1 < layers) {
            // hidden output Z^(jj+1) also feeds its coupling penalty
            const double inv = inverse_mu(weights.mu_h[jj]);
            if (inv != 0.0) upstream += inv * (trace.hidden_outputs[jj] - aux.h[jj]);
        }
        const Matrix& value = jj + 1 < layers ? trace.hidden_outputs[jj] : trace.output;
        const Activation act = params.shape.activation_of(jj);
        Matrix delta = act == Activation::identity
                           ? std::move(upstream)
                           : Matrix(upstream.cwiseProduct(activation_derivative(act, trace.pre_activations[jj], value)));
        const Matrix& layer_input = jj == 0 ? x : trace.hidden_outputs[jj - 1];
        grad_w[jj] = delta * layer_input.transpose();
        grad_w[jj] += 2.0 * weights.lambda * params.weights[jj];
        const double inv_v = inverse_mu(weights.mu_v[jj]);
        if (inv_v != 0.0) grad_w[jj] += inv_v * (params.weights[jj] - aux.v[jj]);
        grad_b[jj] = delta.rowwise().sum();
        if (jj > 0) upstream = params.weights[jj].transpose() * delta;
    }

    out.gradient.resize(params.shape.parameter_count());
    Index offset = 0;
    for (const Matrix& g : grad_w) {
        out.gradient.segment(offset, g.size()) = Eigen::Map<const Vector>(g.data(), g.size());
        offset += g.size();
    }
    for (const Vector& g : grad_b) {
        out.gradient.segment(offset, g.size()) = g;
        offset += g.size();
    }
    return out;
}

}  // namespace dnnsr
