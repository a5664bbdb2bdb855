#pragma once

#include <vector>

#include "dnnsr/network_params.hpp"
#include "dnnsr/observed_matrix.hpp"
#include "dnnsr/trainer.hpp"

namespace dnnsr {

struct SoftImputeConfig {
    double tau = 10.0;
    int max_iters = 500;
    double tol = 1e-5;  ///< stop when ||M_new - M||_F / max(||M||_F, 1) < tol

    void validate() const;
};

struct SoftImputeResult {
    Matrix completed;                ///< observed entries equal X exactly
    std::vector<double> objective;   ///< tau ||M||_* + 0.5 ||P_Omega(M - X)||_F^2 per iterate
    int iterations = 0;
};

/// Iterates M <- svt(P_Omega(X) + P_Omegabar(M), tau) from M = 0.
SoftImputeResult soft_impute_run(const ObservedMatrix& x, const SoftImputeConfig& cfg);

inline Matrix soft_impute(const ObservedMatrix& x, const SoftImputeConfig& cfg) {
    return soft_impute_run(x, cfg).completed;
}

struct AemcConfig {
    std::vector<Index> hidden_dims{256, 128, 256};
    Activation hidden_activation = Activation::tanh;
    Activation output_activation = Activation::identity;
    double lambda = 1e-3;
    double step = 1e-3;
    int max_epochs = 1000;
    double divergence_limit = 1e12;
    std::uint64_t seed = 0;

    /// Architecture, initialization and weight decay shared with a DNN-NSR config.
    static AemcConfig matching(const TrainConfig& config);
    void validate() const;
};

struct AemcResult {
    NetworkParams params;
    std::vector<double> loss;  ///< accepted training loss per epoch
    double final_step = 0.0;
};

/// Gradient descent on ||N o (X - Xhat)||_F^2 + lambda sum ||W||_F^2 with a
/// constant step that halves (and the step is rejected) whenever the loss rises.
/// Throws NumericalFailure once the loss exceeds the divergence limit or is not finite.
AemcResult train_aemc_run(const ObservedMatrix& x, const AemcConfig& config);

inline NetworkParams train_aemc(const ObservedMatrix& x, const AemcConfig& config) {
    return train_aemc_run(x, config).params;
}

}  // namespace dnnsr
