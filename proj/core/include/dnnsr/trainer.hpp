#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dnnsr/errors.hpp"
#include "dnnsr/fcnn.hpp"
#include "dnnsr/network_params.hpp"
#include "dnnsr/observed_matrix.hpp"

namespace dnnsr {

/// How the extrapolation weight omega_k is chosen each epoch.
struct OmegaPolicy {
    /// nullopt: adaptive, ((gamma - 1) / (2 (gamma + 1))) * sqrt(delta * L_prev / L_curr).
    std::optional<double> fixed;

    static OmegaPolicy adaptive() { return {}; }
    static OmegaPolicy constant(double w) { return OmegaPolicy{w}; }
};

/// Hyperparameters of the alternating proximal training loop.
struct TrainSchedule {
    double mu_max = 1e6;
    double mu_min = 1.0;
    double gamma = 1e3;        ///< mu_theta = 1 / (gamma L_theta); must exceed 1
    double box_m = 1e3;        ///< l-infinity bound on theta
    double alpha = 0.1;        ///< l1 weight on hidden outputs (used when `alphas` is empty)
    double beta = 0.1;         ///< nuclear weight on weight matrices (used when `betas` is empty)
    std::vector<double> alphas;  ///< per hidden layer
    std::vector<double> betas;   ///< per weight matrix
    double lambda = 1e-3;      ///< Frobenius weight decay
    double delta_init = 0.99;
    double delta_min = 0.01;
    double delta_max = 0.99;
    double s1 = 0.1;           ///< mu_max shrink factor on retry
    double s2 = 0.5;           ///< delta shrink factor on objective increase
    double s3 = 1.1;           ///< delta growth factor on objective decrease
    int warm_epochs = 200;     ///< E: no delta adaptation or termination before this epoch
    int max_epochs = 1000;     ///< K
    /// Per-layer termination thresholds on squared residuals. Empty: 1e-3 x residual entry count.
    std::vector<double> zeta_h;
    std::vector<double> zeta_v;
    OmegaPolicy omega;
    double lipschitz_init = 1.0;  ///< L_0 for the first backtracking search
    int max_retries = 5;
    int backtrack_cap = 60;

    /// Throws ConfigError on out-of-range values.
    void validate(std::size_t hidden_layers) const;

    double alpha_of(std::size_t i) const { return alphas.empty() ? alpha : alphas.at(i); }
    double beta_of(std::size_t j) const { return betas.empty() ? beta : betas.at(j); }
};

struct TrainConfig {
    std::vector<Index> hidden_dims{256, 128, 256};
    Activation hidden_activation = Activation::tanh;
    Activation output_activation = Activation::identity;
    TrainSchedule schedule;
    std::uint64_t seed = 0;

    NetworkShape shape_for(Index width) const;
};

/// Q = g + sum alpha_i ||h^(i)||_1 + sum beta_j ||V^(j)||_* + indicator(||theta||_inf <= M).
struct ObjectiveValue {
    SmoothObjectiveParts smooth;
    double l1_term = 0.0;
    double nuclear_term = 0.0;
    double box_term = 0.0;  ///< 0 or +infinity

    double total() const { return smooth.total() + l1_term + nuclear_term + box_term; }
};

struct EpochRecord {
    int epoch = 0;
    double q_value = 0.0;       ///< Q(xi_k) under this epoch's penalty parameters
    double q_prev = 0.0;        ///< Q(xi_{k-1}) under the same parameters
    double mu = 0.0;            ///< annealed penalty parameter
    double mu_theta = 0.0;      ///< step 1 / (gamma L)
    double omega = 0.0;         ///< extrapolation weight actually used
    double lipschitz_theta = 0.0;
    int backtrack_count = 0;
    double c1 = 0.0;            ///< sum_i ||H^(i) - Z^(i)||_F^2 after the update
    double c2 = 0.0;            ///< sum_j ||V^(j) - W^(j)||_F^2 after the update
    double theta_step_sq = 0.0; ///< ||theta_k - theta_{k-1}||^2
    double theta_linf = 0.0;    ///< ||theta_k||_inf
    int retries = 0;            ///< epoch repeats triggered by an objective increase
    bool restarted = false;     ///< extrapolated step rejected, plain step taken
    double delta = 0.0;
};

// --- individual steps -------------------------------------------------------

/// mu(k) = mu_min + (mu_max - mu_min) (1 + cos(pi k / K)) / 2; K == 0 gives mu_max.
double anneal_mu(int k, int max_epochs, double mu_max, double mu_min);

/// Penalty parameters for epoch k: the annealed mu for every coupling term.
PenaltyWeights penalty_weights(int k, const TrainSchedule& schedule, double mu_max, std::size_t hidden_layers);

/// h^(i) = soft_threshold(Z^(i), alpha_i mu_h_i) for every hidden layer.
std::vector<Matrix> update_h(const ForwardTrace& trace, const TrainSchedule& schedule,
                             const PenaltyWeights& weights);

/// V^(j) = svt(W^(j), beta_j mu_v_j) for every layer.
std::vector<Matrix> update_v(const NetworkParams& params, const TrainSchedule& schedule,
                             const PenaltyWeights& weights);

/// theta_{k-1} + omega (theta_{k-1} - theta_{k-2}).
Vector extrapolate(const Vector& theta_km1, const Vector& theta_km2, double omega);

/// k == 1: c sqrt(delta); k >= 2: c sqrt(delta l_prev / l_curr), c = (gamma - 1) / (2 (gamma + 1)).
double compute_omega(int k, double delta, double l_prev, double l_curr, double gamma);

/// clip_linf(hat_theta - step * gradient, box_m).
Vector proximal_theta_step(const Vector& hat_theta, const Vector& gradient, double step, double box_m);

/// Outcome of the doubling backtracking search.
struct LipschitzEstimate {
    double lipschitz = 0.0;
    int backtracks = 0;
    Vector candidate;                   ///< accepted theta_k
    NetworkParams candidate_params;
    ForwardTrace candidate_trace;       ///< forward pass at theta_k
    SmoothObjectiveParts candidate_value;
    SmoothObjectiveParts hat_value;     ///< g at hat_theta
};

/// Smallest L = l0 2^t (t = 0..cap) such that theta+ = clip(hat - grad / (gamma L))
/// satisfies g(theta+) <= g(hat) + <grad, theta+ - hat> + L/2 ||theta+ - hat||^2.
/// Throws NumericalFailure when t exceeds `cap`.
LipschitzEstimate estimate_lipschitz_theta(const NetworkShape& shape, const Vector& hat_theta, const Matrix& x,
                                           const Matrix& mask, const AuxState& aux, const PenaltyWeights& weights,
                                           double gamma, double box_m, double l0, int cap = 60);

/// Q for given iterates. Pass a trace computed from `params` to skip the forward pass.
ObjectiveValue objective_q(const NetworkParams& params, const AuxState& aux, const Matrix& x, const Matrix& mask,
                           const TrainSchedule& schedule, const PenaltyWeights& weights,
                           const ForwardTrace* trace = nullptr);

enum class DeltaAction { none, retry, proceed };

struct DeltaDecision {
    double delta = 0.0;
    DeltaAction action = DeltaAction::none;
};

/// Only active for k > E: increase -> shrink delta by s2 (floor delta_min) and retry;
/// decrease -> grow by s3 (cap delta_max) and proceed to the termination test.
DeltaDecision adapt_delta(double q_curr, double q_prev, int k, double delta, const TrainSchedule& schedule);

struct TerminationCheck {
    double c1 = 0.0;  ///< summed over layers
    double c2 = 0.0;
    bool c1_satisfied = false;  ///< every hidden layer under its zeta
    bool c2_satisfied = false;  ///< every weight matrix under its zeta
};

TerminationCheck check_termination(const ForwardTrace& trace, const AuxState& aux, const NetworkParams& params,
                                   const TrainSchedule& schedule);

// --- the full loop ----------------------------------------------------------

struct TrainResult {
    NetworkParams params;
    AuxState aux;
    std::vector<EpochRecord> records;
    double initial_q = 0.0;  ///< Q(xi_0) with h_0 = Z_0, V_0 = W_0
    bool converged = false;  ///< stopped on the C1/C2 test before K
};

/// Raised when a numerical failure aborts training; keeps the epochs completed so far.
class TrainingAborted : public NumericalFailure {
public:
    TrainingAborted(const std::string& what, std::vector<EpochRecord> records)
        : NumericalFailure(what), records_(std::move(records)) {}
    const std::vector<EpochRecord>& records() const noexcept { return records_; }

private:
    std::vector<EpochRecord> records_;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains the autoencoder on the observed columns. Throws ArgumentError when no
/// entry is observed, ConfigError on an invalid schedule, TrainingAborted on
/// numerical failure.
TrainResult train(const ObservedMatrix& x, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// X on the observed entries, the network reconstruction elsewhere.
Matrix complete(const NetworkParams& params, const ObservedMatrix& x);

}  // namespace dnnsr
