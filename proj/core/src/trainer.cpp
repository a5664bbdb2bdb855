#include "dnnsr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dnnsr/prox.hpp"

namespace dnnsr {
namespace {

double max_abs(const NetworkParams& p) {
    double m = 0.0;
    for (const Matrix& w : p.weights) m = std::max(m, w.size() ? w.cwiseAbs().maxCoeff() : 0.0);
    for (const Vector& b : p.biases) m = std::max(m, b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
    return m;
}

double l1_term(const AuxState& aux, const TrainSchedule& schedule) {
    double total = 0.0;
    for (std::size_t i = 0; i < aux.h.size(); ++i) total += schedule.alpha_of(i) * aux.h[i].lpNorm<1>();
    return total;
}

double nuclear_term(const AuxState& aux, const TrainSchedule& schedule) {
    double total = 0.0;
    for (std::size_t j = 0; j < aux.v.size(); ++j) total += schedule.beta_of(j) * nuclear_norm(aux.v[j]);
    return total;
}

ObjectiveValue assemble(const NetworkParams& params, const AuxState& aux, const ForwardTrace& trace, const Matrix& x,
                        const Matrix& mask, const TrainSchedule& schedule, const PenaltyWeights& weights,
                        double nuclear) {
    ObjectiveValue q;
    q.smooth = smooth_objective(params, trace, x, mask, aux, weights);
    q.l1_term = l1_term(aux, schedule);
    q.nuclear_term = nuclear;
    q.box_term = max_abs(params) <= schedule.box_m ? 0.0 : std::numeric_limits<double>::infinity();
    return q;
}

double default_zeta(Index entries) { return 1e-3 * static_cast<double>(entries); }

// One proposal for theta_k from a fixed hat_theta.
struct ThetaProposal {
    double omega = 0.0;
    LipschitzEstimate step;
    double q = 0.0;
};

}  // namespace

void TrainSchedule::validate(std::size_t hidden_layers) const {
    auto fail = [](const std::string& what) { throw ConfigError(what); };
    if (!(mu_min > 0.0) || !(mu_max >= mu_min)) fail("need 0 < mu_min <= mu_max");
    if (!(gamma > 1.0)) fail("gamma must exceed 1");
    if (!(box_m > 0.0)) fail("box bound M must be positive");
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(lambda >= 0.0)) fail("alpha, beta, lambda must be nonnegative");
    if (!alphas.empty() && alphas.size() != hidden_layers) fail("need one alpha per hidden layer");
    if (!betas.empty() && betas.size() != hidden_layers + 1) fail("need one beta per weight matrix");
    for (double a : alphas)
        if (!(a >= 0.0)) fail("alphas must be nonnegative");
    for (double b : betas)
        if (!(b >= 0.0)) fail("betas must be nonnegative");
    if (!(delta_min > 0.0) || !(delta_min <= delta_max) || !(delta_max < 1.0)) fail("need 0 < delta_min <= delta_max < 1");
    if (!(delta_init >= delta_min) || !(delta_init <= delta_max)) fail("delta_init outside [delta_min, delta_max]");
    if (!(s1 > 0.0 && s1 < 1.0) || !(s2 > 0.0 && s2 < 1.0) || !(s3 > 1.0)) fail("need s1, s2 in (0,1) and s3 > 1");
    if (warm_epochs < 0 || max_epochs < 0) fail("epoch counts must be nonnegative");
    if (!zeta_h.empty() && zeta_h.size() != hidden_layers) fail("need one zeta_h per hidden layer");
    if (!zeta_v.empty() && zeta_v.size() != hidden_layers + 1) fail("need one zeta_v per weight matrix");
    if (omega.fixed && !(*omega.fixed >= 0.0 && *omega.fixed < 1.0)) fail("fixed omega must lie in [0, 1)");
    if (!(lipschitz_init > 0.0)) fail("lipschitz_init must be positive");
    if (max_retries < 0 || backtrack_cap < 0) fail("retry and backtrack caps must be nonnegative");
}

NetworkShape TrainConfig::shape_for(Index width) const {
    NetworkShape shape;
    shape.layer_dims.push_back(width);
    shape.layer_dims.insert(shape.layer_dims.end(), hidden_dims.begin(), hidden_dims.end());
    shape.layer_dims.push_back(width);
    shape.hidden_activation = hidden_activation;
    shape.output_activation = output_activation;
    shape.validate();
    return shape;
}

double anneal_mu(int k, int max_epochs, double mu_max, double mu_min) {
    if (max_epochs <= 0) return mu_max;
    const double ratio = static_cast<double>(std::clamp(k, 0, max_epochs)) / static_cast<double>(max_epochs);
    return mu_min + 0.5 * (mu_max - mu_min) * (1.0 + std::cos(std::numbers::pi * ratio));
}

PenaltyWeights penalty_weights(int k, const TrainSchedule& schedule, double mu_max, std::size_t hidden_layers) {
    const double mu = anneal_mu(k, schedule.max_epochs, std::max(mu_max, schedule.mu_min), schedule.mu_min);
    return PenaltyWeights::uniform(hidden_layers, mu, schedule.lambda);
}

std::vector<Matrix> update_h(const ForwardTrace& trace, const TrainSchedule& schedule, const PenaltyWeights& weights) {
    std::vector<Matrix> h;
    h.reserve(trace.hidden_outputs.size());
    for (std::size_t i = 0; i < trace.hidden_outputs.size(); ++i) {
        h.push_back(prox::soft_threshold(trace.hidden_outputs[i], schedule.alpha_of(i) * weights.mu_h.at(i)));
    }
    return h;
}

std::vector<Matrix> update_v(const NetworkParams& params, const TrainSchedule& schedule,
                             const PenaltyWeights& weights) {
    std::vector<Matrix> v;
    v.reserve(params.weights.size());
    for (std::size_t j = 0; j < params.weights.size(); ++j) {
        v.push_back(prox::svt(params.weights[j], schedule.beta_of(j) * weights.mu_v.at(j)));
    }
    return v;
}

Vector extrapolate(const Vector& theta_km1, const Vector& theta_km2, double omega) {
    if (theta_km1.size() != theta_km2.size()) throw ShapeError("extrapolate: iterate lengths differ");
    return theta_km1 + omega * (theta_km1 - theta_km2);
}

double compute_omega(int k, double delta, double l_prev, double l_curr, double gamma) {
    const double c = (gamma - 1.0) / (2.0 * (gamma + 1.0));
    if (delta <= 0.0) return 0.0;
    if (k <= 1) return c * std::sqrt(delta);
    return c * std::sqrt(delta * l_prev / l_curr);
}

Vector proximal_theta_step(const Vector& hat_theta, const Vector& gradient, double step, double box_m) {
    return prox::clip_linf(hat_theta - step * gradient, box_m);
}

LipschitzEstimate estimate_lipschitz_theta(const NetworkShape& shape, const Vector& hat_theta, const Matrix& x,
                                           const Matrix& mask, const AuxState& aux, const PenaltyWeights& weights,
                                           double gamma, double box_m, double l0, int cap) {
    if (!(l0 > 0.0)) throw ArgumentError("estimate_lipschitz_theta: L0 must be positive");
    const NetworkParams hat_params = unflatten(hat_theta, shape);
    const ValueAndGradient at_hat = value_and_grad_theta(hat_params, x, mask, aux, weights);
    const double g_hat = at_hat.value.total();

    double lipschitz = l0;
    for (int t = 0; t <= cap; ++t, lipschitz *= 2.0) {
        Vector candidate = proximal_theta_step(hat_theta, at_hat.gradient, 1.0 / (gamma * lipschitz), box_m);
        const Vector diff = candidate - hat_theta;
        NetworkParams params = unflatten(candidate, shape);
        ForwardTrace trace = forward(params, x);
        const SmoothObjectiveParts value = smooth_objective(params, trace, x, mask, aux, weights);
        const double bound = g_hat + at_hat.gradient.dot(diff) + 0.5 * lipschitz * diff.squaredNorm();
        // Relative slack absorbs rounding when the step is vanishingly small.
        if (std::isfinite(value.total()) && value.total() <= bound + 1e-13 * std::abs(g_hat)) {
            return LipschitzEstimate{lipschitz,        t,     std::move(candidate), std::move(params),
                                     std::move(trace), value, at_hat.value};
        }
    }
    throw NumericalFailure("Lipschitz backtracking exceeded " + std::to_string(cap) + " doublings");
}

ObjectiveValue objective_q(const NetworkParams& params, const AuxState& aux, const Matrix& x, const Matrix& mask,
                           const TrainSchedule& schedule, const PenaltyWeights& weights, const ForwardTrace* trace) {
    if (trace) return assemble(params, aux, *trace, x, mask, schedule, weights, nuclear_term(aux, schedule));
    const ForwardTrace own = forward(params, x);
    return assemble(params, aux, own, x, mask, schedule, weights, nuclear_term(aux, schedule));
}

DeltaDecision adapt_delta(double q_curr, double q_prev, int k, double delta, const TrainSchedule& schedule) {
    if (k <= schedule.warm_epochs) return {delta, DeltaAction::none};
    if (q_curr > q_prev) return {std::max(schedule.s2 * delta, schedule.delta_min), DeltaAction::retry};
    if (q_curr < q_prev) return {std::min(schedule.s3 * delta, schedule.delta_max), DeltaAction::proceed};
    return {delta, DeltaAction::none};
}

TerminationCheck check_termination(const ForwardTrace& trace, const AuxState& aux, const NetworkParams& params,
                                   const TrainSchedule& schedule) {
    if (aux.h.size() != trace.hidden_outputs.size() || aux.v.size() != params.weights.size()) {
        throw ShapeError("check_termination: aux state does not match network depth");
    }
    TerminationCheck out;
    out.c1_satisfied = true;
    out.c2_satisfied = true;
    for (std::size_t i = 0; i < aux.h.size(); ++i) {
        const Matrix& z = trace.hidden_outputs[i];
        if (aux.h[i].rows() != z.rows() || aux.h[i].cols() != z.cols()) throw ShapeError("aux h shape mismatch");
        const double r = (aux.h[i] - z).squaredNorm();
        const double zeta = schedule.zeta_h.empty() ? default_zeta(z.size()) : schedule.zeta_h[i];
        out.c1 += r;
        out.c1_satisfied = out.c1_satisfied && r <= zeta;
    }
    for (std::size_t j = 0; j < aux.v.size(); ++j) {
        const Matrix& w = params.weights[j];
        if (aux.v[j].rows() != w.rows() || aux.v[j].cols() != w.cols()) throw ShapeError("aux V shape mismatch");
        const double r = (aux.v[j] - w).squaredNorm();
        const double zeta = schedule.zeta_v.empty() ? default_zeta(w.size()) : schedule.zeta_v[j];
        out.c2 += r;
        out.c2_satisfied = out.c2_satisfied && r <= zeta;
    }
    return out;
}

TrainResult train(const ObservedMatrix& x, const TrainConfig& config, const EpochCallback& on_epoch) {
    x.validate();
    if (x.omega_count() == 0) throw ArgumentError("train: no observed entries");
    const NetworkShape shape = config.shape_for(x.rows());
    const TrainSchedule& schedule = config.schedule;
    const std::size_t hidden = shape.num_hidden();
    schedule.validate(hidden);

    Rng rng(config.seed);
    TrainResult result;
    result.params = init_network(shape, rng);
    Vector theta = flatten(result.params);
    Vector theta_prev = theta;  // theta_{-1} = theta_0

    ForwardTrace trace = forward(result.params, x.data);
    result.aux = anchored_aux(result.params, trace);
    double nuclear_prev = nuclear_term(result.aux, schedule);
    result.initial_q = assemble(result.params, result.aux, trace, x.data, x.mask, schedule,
                                penalty_weights(0, schedule, schedule.mu_max, hidden), nuclear_prev)
                           .total();

    double delta = schedule.delta_init;
    double mu_max = schedule.mu_max;
    std::vector<double> lipschitz_history;

    for (int k = 1; k <= schedule.max_epochs; ++k) {
        int retries = 0;
        std::optional<EpochRecord> best_record;
        std::optional<ThetaProposal> best_proposal;
        std::optional<AuxState> best_aux;
        double best_nuclear = 0.0;
        bool stop = false;

        for (;;) {
            const PenaltyWeights weights = penalty_weights(k, schedule, mu_max, hidden);
            const double q_prev =
                assemble(result.params, result.aux, trace, x.data, x.mask, schedule, weights, nuclear_prev).total();

            AuxState next_aux{update_h(trace, schedule, weights), update_v(result.params, schedule, weights)};
            const double nuclear_next = nuclear_term(next_aux, schedule);
            const double q_mid =
                assemble(result.params, next_aux, trace, x.data, x.mask, schedule, weights, nuclear_next).total();

            double omega = 0.0;
            if (schedule.omega.fixed) {
                omega = *schedule.omega.fixed;
            } else if (lipschitz_history.size() < 2) {
                omega = compute_omega(1, delta, 1.0, 1.0, schedule.gamma);
            } else {
                omega = compute_omega(k, delta, lipschitz_history[lipschitz_history.size() - 2],
                                      lipschitz_history.back(), schedule.gamma);
            }
            const double l0 = lipschitz_history.empty() ? schedule.lipschitz_init : lipschitz_history.back() / 2.0;

            auto propose = [&](double w) {
                ThetaProposal p;
                p.omega = w;
                p.step = estimate_lipschitz_theta(shape, extrapolate(theta, theta_prev, w), x.data, x.mask, next_aux,
                                                  weights, schedule.gamma, schedule.box_m, l0, schedule.backtrack_cap);
                ObjectiveValue q;
                q.smooth = p.step.candidate_value;
                q.l1_term = l1_term(next_aux, schedule);
                q.nuclear_term = nuclear_next;
                p.q = q.total();
                return p;
            };

            ThetaProposal proposal;
            bool restarted = false;
            try {
                proposal = propose(omega);
                if (omega > 0.0 && proposal.q > q_mid) {
                    proposal = propose(0.0);
                    restarted = true;
                }
            } catch (const NumericalFailure& e) {
                // Descent test cannot be met under the cap: shrink mu_max and repeat the epoch.
                if (retries >= schedule.max_retries) {
                    if (best_record) break;
                    throw TrainingAborted(std::string("epoch ") + std::to_string(k) + ": " + e.what(),
                                          result.records);
                }
                mu_max *= schedule.s1;
                ++retries;
                continue;
            }

            const DeltaDecision decision = adapt_delta(proposal.q, q_prev, k, delta, schedule);

            EpochRecord rec;
            rec.epoch = k;
            rec.q_value = proposal.q;
            rec.q_prev = q_prev;
            rec.mu = weights.mu_h.empty() ? weights.mu_v.front() : weights.mu_h.front();
            rec.mu_theta = 1.0 / (schedule.gamma * proposal.step.lipschitz);
            rec.omega = proposal.omega;
            rec.lipschitz_theta = proposal.step.lipschitz;
            rec.backtrack_count = proposal.step.backtracks;
            rec.restarted = restarted;

            if (!best_record || proposal.q < best_record->q_value) {
                best_record = rec;
                best_proposal = std::move(proposal);
                best_aux = next_aux;
                best_nuclear = nuclear_next;
            }
            if (decision.action == DeltaAction::retry) {
                delta = decision.delta;
                if (retries < schedule.max_retries) {
                    mu_max *= schedule.s1;
                    ++retries;
                    continue;
                }
                break;
            }
            delta = decision.delta;
            stop = decision.action == DeltaAction::proceed;
            break;
        }

        // Commit the accepted proposal.
        theta_prev = std::move(theta);
        theta = std::move(best_proposal->step.candidate);
        result.params = std::move(best_proposal->step.candidate_params);
        trace = std::move(best_proposal->step.candidate_trace);
        result.aux = std::move(*best_aux);
        nuclear_prev = best_nuclear;
        lipschitz_history.push_back(best_proposal->step.lipschitz);

        const TerminationCheck term = check_termination(trace, result.aux, result.params, schedule);
        EpochRecord rec = *best_record;
        rec.c1 = term.c1;
        rec.c2 = term.c2;
        rec.theta_step_sq = (theta - theta_prev).squaredNorm();
        rec.theta_linf = theta.lpNorm<Eigen::Infinity>();
        rec.retries = retries;
        rec.delta = delta;
        result.records.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (!std::isfinite(rec.q_value)) {
            throw TrainingAborted("epoch " + std::to_string(k) + ": objective is not finite", result.records);
        }
        if (stop && term.c1_satisfied && term.c2_satisfied) {
            result.converged = true;
            break;
        }
    }
    return result;
}

Matrix complete(const NetworkParams& params, const ObservedMatrix& x) {
    const Matrix out = predict(params, x.data);
    return (x.mask.array() != 0.0).select(x.data, out);
}

}  // namespace dnnsr
