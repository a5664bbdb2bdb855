#include "dnnsr/baselines.hpp"

#include <cmath>
#include <limits>

#include "dnnsr/errors.hpp"
#include "dnnsr/fcnn.hpp"
#include "dnnsr/prox.hpp"

namespace dnnsr {

void SoftImputeConfig::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("soft_impute: tau must be positive");
    if (!(tol > 0.0)) throw ConfigError("soft_impute: tol must be positive");
    if (max_iters < 0) throw ConfigError("soft_impute: max_iters must be nonnegative");
}

namespace {

double soft_impute_objective(const Matrix& m, const ObservedMatrix& x, double tau) {
    const double fit = (x.mask.cwiseProduct(m) - x.data).squaredNorm();
    return tau * nuclear_norm(m) + 0.5 * fit;
}

}  // namespace

SoftImputeResult soft_impute_run(const ObservedMatrix& x, const SoftImputeConfig& cfg) {
    cfg.validate();
    if (x.omega_count() == 0) throw ArgumentError("soft_impute: no observed entries");

    const Matrix unobserved = Matrix::Ones(x.rows(), x.cols()) - x.mask;
    SoftImputeResult out;
    Matrix m = Matrix::Zero(x.rows(), x.cols());
    out.objective.push_back(soft_impute_objective(m, x, cfg.tau));
    for (int it = 0; it < cfg.max_iters; ++it) {
        Matrix filled = x.data + unobserved.cwiseProduct(m);
        Matrix next = prox::svt(filled, cfg.tau);
        const double change = (next - m).norm() / std::max(m.norm(), 1.0);
        m = std::move(next);
        out.objective.push_back(soft_impute_objective(m, x, cfg.tau));
        out.iterations = it + 1;
        if (change < cfg.tol) break;
    }
    out.completed = x.data + unobserved.cwiseProduct(m);
    return out;
}

AemcConfig AemcConfig::matching(const TrainConfig& config) {
    AemcConfig out;
    out.hidden_dims = config.hidden_dims;
    out.hidden_activation = config.hidden_activation;
    out.output_activation = config.output_activation;
    out.lambda = config.schedule.lambda;
    out.max_epochs = config.schedule.max_epochs;
    out.seed = config.seed;
    return out;
}

void AemcConfig::validate() const {
    if (hidden_dims.empty()) throw ConfigError("aemc: at least one hidden layer is required");
    for (Index d : hidden_dims)
        if (d <= 0) throw ConfigError("aemc: layer widths must be positive");
    if (!(lambda >= 0.0)) throw ConfigError("aemc: lambda must be nonnegative");
    if (!(step > 0.0)) throw ConfigError("aemc: step must be positive");
    if (max_epochs < 0) throw ConfigError("aemc: max_epochs must be nonnegative");
}

AemcResult train_aemc_run(const ObservedMatrix& x, const AemcConfig& config) {
    config.validate();
    if (x.omega_count() == 0) throw ArgumentError("aemc: no observed entries");

    NetworkShape shape;
    shape.layer_dims.push_back(x.rows());
    shape.layer_dims.insert(shape.layer_dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
    shape.layer_dims.push_back(x.rows());
    shape.hidden_activation = config.hidden_activation;
    shape.output_activation = config.output_activation;

    Rng rng(config.seed);
    AemcResult out;
    out.params = init_network(shape, rng);

    const double inf = std::numeric_limits<double>::infinity();
    const PenaltyWeights weights = PenaltyWeights::uniform(shape.num_hidden(), inf, config.lambda);
    // Coupling terms are off; the slack values only need matching shapes.
    const AuxState aux = anchored_aux(out.params, forward(out.params, x.data));

    Vector theta = flatten(out.params);
    ValueAndGradient cur = value_and_grad_theta(out.params, x.data, x.mask, aux, weights);
    double step = config.step;
    auto check = [&](double loss) {
        if (!std::isfinite(loss) || loss > config.divergence_limit)
            throw NumericalFailure("aemc: training diverged");
    };
    check(cur.value.total());

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        Vector cand_theta = theta - step * cur.gradient;
        NetworkParams cand = unflatten(cand_theta, shape);
        ValueAndGradient next = value_and_grad_theta(cand, x.data, x.mask, aux, weights);
        const double loss = next.value.total();
        if (!std::isfinite(loss) || loss > cur.value.total()) {
            if (std::isfinite(loss)) check(loss);
            step *= 0.5;
            if (step < 1e-300) throw NumericalFailure("aemc: step underflow");
            out.loss.push_back(cur.value.total());
            continue;
        }
        theta = std::move(cand_theta);
        out.params = std::move(cand);
        cur = std::move(next);
        out.loss.push_back(loss);
    }
    out.final_step = step;
    return out;
}

}  // namespace dnnsr
