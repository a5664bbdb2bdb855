#include <cmath>
#include <cstring>
#include <limits>

#include <gtest/gtest.h>

#include "dnnsr/datasets.hpp"
#include "dnnsr/errors.hpp"
#include "dnnsr/prox.hpp"
#include "dnnsr/trainer.hpp"
#include "test_support.hpp"

using namespace dnnsr;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

NetworkShape shape_of(std::vector<Index> dims) {
    NetworkShape s;
    s.layer_dims = std::move(dims);
    return s;
}

ObservedMatrix small_problem(std::uint64_t seed, Index m = 12, Index n = 10, double rho = 0.3) {
    const Matrix x = gen_synthetic(m, n, 2, seed);
    return apply_mask(x / x.cwiseAbs().maxCoeff(), rho, seed + 1000);
}

TrainConfig small_config(int epochs) {
    TrainConfig c;
    c.hidden_dims = {6, 3, 6};
    c.schedule.max_epochs = epochs;
    c.schedule.gamma = 2.0;
    c.schedule.warm_epochs = 20;
    c.seed = 5;
    return c;
}

// Straightforward transcription of one training run with a fixed extrapolation
// weight and no delta adaptation, built from the primitive operators only.
std::vector<double> reference_q_trace(const ObservedMatrix& x, const TrainConfig& c) {
    const TrainSchedule& s = c.schedule;
    const NetworkShape shape = c.shape_for(x.rows());
    Rng rng(c.seed);
    NetworkParams params = init_network(shape, rng);
    Vector theta = flatten(params);
    Vector theta_prev = theta;
    double l_prev = 0.0;
    std::vector<double> qs;
    for (int k = 1; k <= s.max_epochs; ++k) {
        const double mu = s.mu_min + 0.5 * (s.mu_max - s.mu_min) * (1.0 + std::cos(M_PI * k / s.max_epochs));
        const PenaltyWeights w = PenaltyWeights::uniform(shape.num_hidden(), mu, s.lambda);
        const ForwardTrace t = forward(params, x.data);
        AuxState aux;
        for (const Matrix& z : t.hidden_outputs) aux.h.push_back(prox::soft_threshold(z, s.alpha * mu));
        for (const Matrix& wj : params.weights) aux.v.push_back(prox::svt(wj, s.beta * mu));
        double nonsmooth = 0.0;
        for (const Matrix& h : aux.h) nonsmooth += s.alpha * h.cwiseAbs().sum();
        for (const Matrix& v : aux.v) nonsmooth += s.beta * nuclear_norm(v);
        const double q_mid = smooth_objective(params, x.data, x.mask, aux, w).total() + nonsmooth;

        auto step = [&](double omega, double& lip, double& q) {
            const Vector hat = theta + omega * (theta - theta_prev);
            const NetworkParams hp = unflatten(hat, shape);
            const double g_hat = smooth_objective(hp, x.data, x.mask, aux, w).total();
            const Vector grad = grad_theta(hp, x.data, x.mask, aux, w);
            lip = k == 1 ? s.lipschitz_init : l_prev / 2.0;
            for (;;) {
                const Vector cand = prox::clip_linf(hat - grad / (s.gamma * lip), s.box_m);
                const Vector d = cand - hat;
                const double g = smooth_objective(unflatten(cand, shape), x.data, x.mask, aux, w).total();
                if (g <= g_hat + grad.dot(d) + 0.5 * lip * d.squaredNorm() + 1e-13 * std::abs(g_hat)) {
                    q = g + nonsmooth;
                    return cand;
                }
                lip *= 2.0;
            }
        };
        double lip = 0.0;
        double q = 0.0;
        Vector next = step(*s.omega.fixed, lip, q);
        if (*s.omega.fixed > 0.0 && q > q_mid) next = step(0.0, lip, q);
        theta_prev = theta;
        theta = next;
        params = unflatten(theta, shape);
        l_prev = lip;
        qs.push_back(q);
    }
    return qs;
}

double h_subproblem(const Matrix& h, const Matrix& z, double alpha, double mu) {
    return alpha * h.cwiseAbs().sum() + (z - h).squaredNorm() / (2.0 * mu);
}

double v_subproblem(const Matrix& v, const Matrix& w, double beta, double mu) {
    return beta * nuclear_norm(v) + (w - v).squaredNorm() / (2.0 * mu);
}

}  // namespace

TEST(AnnealMu, Endpoints) {
    EXPECT_DOUBLE_EQ(anneal_mu(0, 100, 1e6, 1.0), 1e6);
    EXPECT_DOUBLE_EQ(anneal_mu(100, 100, 1e6, 1.0), 1.0);
    EXPECT_NEAR(anneal_mu(50, 100, 1e6, 1.0), (1e6 + 1.0) / 2.0, 1e-6);
    EXPECT_DOUBLE_EQ(anneal_mu(3, 0, 7.0, 1.0), 7.0);
}

TEST(AnnealMu, Monotone) {
    for (int k = 1; k <= 200; ++k) EXPECT_LE(anneal_mu(k, 200, 1e3, 1.0), anneal_mu(k - 1, 200, 1e3, 1.0));
}

TEST(PenaltyWeights, UniformAcrossLayers) {
    TrainSchedule s;
    s.max_epochs = 10;
    const PenaltyWeights w = penalty_weights(0, s, s.mu_max, 3);
    ASSERT_EQ(w.mu_h.size(), 3u);
    ASSERT_EQ(w.mu_v.size(), 4u);
    for (double m : w.mu_h) EXPECT_EQ(m, s.mu_max);
    for (double m : w.mu_v) EXPECT_EQ(m, s.mu_max);
    EXPECT_EQ(w.lambda, s.lambda);
}

TEST(UpdateH, ZeroWeightAndDeadZone) {
    Rng rng(1);
    ForwardTrace t;
    t.hidden_outputs = {rng.normal_matrix(4, 3)};
    TrainSchedule s;
    s.alpha = 0.0;
    const PenaltyWeights w = PenaltyWeights::uniform(1, 2.0, 0.0);
    EXPECT_EQ(update_h(t, s, w)[0], t.hidden_outputs[0]);
    s.alpha = 1.0;
    t.hidden_outputs[0] = t.hidden_outputs[0].cwiseMin(1.9).cwiseMax(-1.9);
    EXPECT_TRUE(update_h(t, s, w)[0].isZero(0.0));
}

TEST(UpdateH, StrictSubproblemOptimality) {
    Rng rng(2);
    ForwardTrace t;
    t.hidden_outputs = {rng.normal_matrix(5, 4), rng.normal_matrix(3, 4)};
    TrainSchedule s;
    s.alphas = {0.1, 0.3};
    const PenaltyWeights w = PenaltyWeights::uniform(2, 1.5, 0.0);
    const auto h = update_h(t, s, w);
    for (std::size_t i = 0; i < 2; ++i) {
        const double best = h_subproblem(h[i], t.hidden_outputs[i], s.alphas[i], 1.5);
        for (int p = 0; p < 100; ++p) {
            Matrix d = rng.normal_matrix(h[i].rows(), h[i].cols());
            d *= 1e-3 / d.norm();
            EXPECT_LT(best, h_subproblem(h[i] + d, t.hidden_outputs[i], s.alphas[i], 1.5));
        }
    }
}

TEST(UpdateV, IdentityZeroAndShrinkage) {
    Rng rng(3);
    const NetworkShape shape = shape_of({5, 4, 5});
    NetworkParams p = init_network(shape, rng);
    TrainSchedule s;
    s.beta = 0.0;
    const PenaltyWeights w = PenaltyWeights::uniform(1, 0.5, 0.0);
    auto v = update_v(p, s, w);
    for (std::size_t j = 0; j < v.size(); ++j) EXPECT_LT((v[j] - p.weights[j]).norm(), 1e-12);
    s.beta = 0.2;
    v = update_v(p, s, w);
    for (std::size_t j = 0; j < v.size(); ++j) EXPECT_LT(nuclear_norm(v[j]), nuclear_norm(p.weights[j]));
    const auto zero = update_v(NetworkParams::zeros(shape), s, w);
    for (const Matrix& z : zero) EXPECT_TRUE(z.isZero(0.0));
}

TEST(UpdateV, StrictSubproblemOptimality) {
    Rng rng(4);
    NetworkParams p = init_network(shape_of({6, 4, 6}), rng);
    TrainSchedule s;
    s.beta = 0.1;
    const PenaltyWeights w = PenaltyWeights::uniform(1, 2.0, 0.0);
    const auto v = update_v(p, s, w);
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double best = v_subproblem(v[j], p.weights[j], 0.1, 2.0);
        for (int q = 0; q < 100; ++q) {
            Matrix d = rng.normal_matrix(v[j].rows(), v[j].cols());
            d *= 1e-3 / d.norm();
            EXPECT_LT(best, v_subproblem(v[j] + d, p.weights[j], 0.1, 2.0));
        }
    }
}

TEST(Extrapolate, Examples) {
    Vector a(1), b(1);
    a << 2.0;
    b << 1.0;
    EXPECT_EQ(extrapolate(a, b, 0.0), a);
    EXPECT_EQ(extrapolate(a, a, 0.7), a);
    EXPECT_DOUBLE_EQ(extrapolate(a, b, 1.0)[0], 3.0);
    EXPECT_THROW(extrapolate(a, Vector::Zero(2), 0.5), ShapeError);
}

TEST(ComputeOmega, Examples) {
    EXPECT_NEAR(compute_omega(1, 0.99999999, 1.0, 1.0, 1e12), 0.5, 1e-8);
    EXPECT_EQ(compute_omega(3, 0.0, 1.0, 1.0, 3.0), 0.0);
    EXPECT_DOUBLE_EQ(compute_omega(2, 0.25, 4.0, 4.0, 3.0), 0.125);
    EXPECT_DOUBLE_EQ(compute_omega(1, 0.25, 100.0, 1.0, 3.0), 0.125);
    EXPECT_DOUBLE_EQ(compute_omega(2, 0.25, 4.0, 1.0, 3.0), 0.25);
}

TEST(ComputeOmega, NeverExceedsBound) {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double gamma = 1.0 + rng.uniform(1e-3, 1e4);
        const double delta = rng.uniform(0.01, 0.99);
        const double lp = rng.uniform(0.1, 10.0);
        const double lc = rng.uniform(0.1, 10.0);
        const double bound = (gamma - 1.0) / (2.0 * (gamma + 1.0)) * std::sqrt(delta * lp / lc);
        EXPECT_LE(compute_omega(2, delta, lp, lc, gamma), bound * (1.0 + 1e-15));
    }
}

TEST(ProximalThetaStep, FixedPointAndClip) {
    Vector hat(3);
    hat << 0.5, -0.5, 0.0;
    EXPECT_EQ(proximal_theta_step(hat, Vector::Zero(3), 0.1, 1.0), hat);
    Vector g(3);
    g << -100.0, 100.0, 0.0;
    const Vector out = proximal_theta_step(hat, g, 0.1, 1.0);
    EXPECT_EQ(out[0], 1.0);
    EXPECT_EQ(out[1], -1.0);
    EXPECT_EQ(out[2], 0.0);
}

TEST(EstimateLipschitz, QuadraticToy) {
    // One linear layer, zero input, lambda = 1: g(theta) = ||W||^2 + ||b||^2, Hessian 2 I.
    const NetworkShape shape = shape_of({3, 3});
    Rng rng(6);
    NetworkParams p = init_network(shape, rng);
    p.biases[0] << 0.5, -0.3, 0.2;
    const Matrix x = Matrix::Zero(3, 1);
    const Matrix mask = Matrix::Ones(3, 1);
    const PenaltyWeights w = PenaltyWeights::uniform(0, kInf, 1.0);
    const AuxState aux = anchored_aux(p, forward(p, x));
    const Vector theta = flatten(p);
    const LipschitzEstimate e = estimate_lipschitz_theta(shape, theta, x, mask, aux, w, 1.5, 1e3, 0.125);
    EXPECT_GE(e.lipschitz, 1.0);
    EXPECT_LE(e.lipschitz, 4.0);
    const LipschitzEstimate again = estimate_lipschitz_theta(shape, theta, x, mask, aux, w, 1.5, 1e3, 0.125);
    EXPECT_EQ(again.lipschitz, e.lipschitz);
    EXPECT_EQ(again.candidate, e.candidate);
}

TEST(EstimateLipschitz, CapExceededThrows) {
    const NetworkShape shape = shape_of({3, 3});
    Rng rng(7);
    const NetworkParams p = init_network(shape, rng);
    const Matrix x = Matrix::Zero(3, 1);
    const PenaltyWeights w = PenaltyWeights::uniform(0, kInf, 1.0);
    const AuxState aux = anchored_aux(p, forward(p, x));
    // gamma barely above 1 and L0 tiny: 2^2 doublings cannot reach L >= 2.
    EXPECT_THROW(estimate_lipschitz_theta(shape, flatten(p), x, Matrix::Ones(3, 1), aux, w, 1.01, 1e3, 1e-6, 2),
                 NumericalFailure);
}

TEST(ObjectiveQ, ZeroCase) {
    Rng rng(8);
    const NetworkParams p = init_network(shape_of({4, 3, 4}), rng);
    const Matrix x = rng.normal_matrix(4, 5);
    const ForwardTrace t = forward(p, x);
    const AuxState aux = anchored_aux(p, t);
    TrainSchedule s;
    s.alpha = s.beta = s.lambda = 0.0;
    const PenaltyWeights w = PenaltyWeights::uniform(1, 1.0, 0.0);
    EXPECT_EQ(objective_q(p, aux, x, Matrix::Zero(4, 5), s, w).total(), 0.0);
}

TEST(ObjectiveQ, BoxIndicator) {
    Rng rng(9);
    NetworkParams p = init_network(shape_of({4, 3, 4}), rng);
    const Matrix x = rng.normal_matrix(4, 5);
    TrainSchedule s;
    s.box_m = 0.5;
    p.biases[0][0] = 0.75;
    const AuxState aux = anchored_aux(p, forward(p, x));
    const PenaltyWeights w = PenaltyWeights::uniform(1, 1.0, 0.0);
    const ObjectiveValue q = objective_q(p, aux, x, Matrix::Ones(4, 5), s, w);
    EXPECT_TRUE(std::isinf(q.box_term));
    EXPECT_TRUE(std::isinf(q.total()));
}

TEST(ObjectiveQ, MatchesResummation) {
    Rng rng(10);
    const NetworkParams p = init_network(shape_of({5, 4, 3, 4, 5}), rng);
    const Matrix mask = testutil::random_mask(5, 6, 0.4, rng);
    const Matrix x = rng.normal_matrix(5, 6).cwiseProduct(mask);
    const ForwardTrace t = forward(p, x);
    AuxState aux = anchored_aux(p, t);
    for (auto& h : aux.h) h = prox::soft_threshold(h, 0.05);
    for (auto& v : aux.v) v = prox::svt(v, 0.05);
    TrainSchedule s;
    s.alphas = {0.1, 0.2, 0.3};
    s.betas = {0.4, 0.3, 0.2, 0.1};
    s.lambda = 0.01;
    const PenaltyWeights w = PenaltyWeights::uniform(3, 0.8, s.lambda);

    double expected = (mask.cwiseProduct(t.output) - x).squaredNorm();
    for (const Matrix& wj : p.weights) expected += s.lambda * wj.squaredNorm();
    for (std::size_t i = 0; i < 3; ++i) {
        expected += (t.hidden_outputs[i] - aux.h[i]).squaredNorm() / 1.6;
        expected += s.alphas[i] * aux.h[i].cwiseAbs().sum();
    }
    for (std::size_t j = 0; j < 4; ++j) {
        expected += (p.weights[j] - aux.v[j]).squaredNorm() / 1.6;
        const Svd d = svd(aux.v[j]);
        expected += s.betas[j] * d.singular_values.sum();
    }
    const ObjectiveValue q = objective_q(p, aux, x, mask, s, w);
    EXPECT_NEAR(q.total(), expected, 1e-12 * expected);
    EXPECT_EQ(q.box_term, 0.0);
    EXPECT_EQ(objective_q(p, aux, x, mask, s, w, &t).total(), q.total());
}

TEST(AdaptDelta, Examples) {
    TrainSchedule s;
    s.warm_epochs = 10;
    DeltaDecision d = adapt_delta(1.0, 2.0, 11, 0.9, s);
    EXPECT_DOUBLE_EQ(d.delta, 0.99);
    EXPECT_EQ(d.action, DeltaAction::proceed);
    d = adapt_delta(3.0, 2.0, 11, 0.011, s);
    EXPECT_DOUBLE_EQ(d.delta, 0.01);
    EXPECT_EQ(d.action, DeltaAction::retry);
    d = adapt_delta(3.0, 2.0, 10, 0.5, s);
    EXPECT_EQ(d.delta, 0.5);
    EXPECT_EQ(d.action, DeltaAction::none);
    d = adapt_delta(1.0, 2.0, 5, 0.5, s);
    EXPECT_EQ(d.delta, 0.5);
    EXPECT_EQ(d.action, DeltaAction::none);
}

TEST(CheckTermination, Examples) {
    Rng rng(11);
    const NetworkParams p = init_network(shape_of({5, 3, 5}), rng);
    const ForwardTrace t = forward(p, rng.normal_matrix(5, 4));
    AuxState aux = anchored_aux(p, t);
    TrainSchedule s;
    s.zeta_h = {1e-12};
    s.zeta_v = {1e-12, 1e-12};
    TerminationCheck c = check_termination(t, aux, p, s);
    EXPECT_TRUE(c.c1_satisfied && c.c2_satisfied);

    aux.h[0](0, 0) += 0.5;
    aux.v[1](1, 1) -= 0.25;
    aux.v[0](0, 2) += 0.125;
    s.zeta_h = {0.0};
    s.zeta_v = {0.0, 0.0};
    c = check_termination(t, aux, p, s);
    EXPECT_FALSE(c.c1_satisfied);
    EXPECT_FALSE(c.c2_satisfied);
    EXPECT_DOUBLE_EQ(c.c1, 0.25);
    EXPECT_DOUBLE_EQ(c.c2, 0.0625 + 0.015625);

    s.zeta_h = {0.3};
    s.zeta_v = {0.02, 0.07};
    c = check_termination(t, aux, p, s);
    EXPECT_TRUE(c.c1_satisfied);
    EXPECT_TRUE(c.c2_satisfied);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
    const ObservedMatrix x = small_problem(1);
    TrainConfig c = small_config(0);
    const TrainResult r = train(x, c);
    Rng rng(c.seed);
    EXPECT_TRUE(r.params == init_network(c.shape_for(x.rows()), rng));
    EXPECT_TRUE(r.records.empty());
}

TEST(Train, RejectsEmptyObservationAndBadConfig) {
    ObservedMatrix x = small_problem(2);
    TrainConfig c = small_config(3);
    c.schedule.gamma = 1.0;
    EXPECT_THROW(train(x, c), ConfigError);
    x = ObservedMatrix::from(x.data, Matrix::Zero(x.rows(), x.cols()));
    EXPECT_THROW(train(x, small_config(3)), ArgumentError);
}

TEST(Train, FullyObservedLossDropsTenfold) {
    const ObservedMatrix x = ObservedMatrix::full(small_problem(3).data);
    const TrainConfig c = small_config(400);
    Rng rng(c.seed);
    const NetworkParams start = init_network(c.shape_for(x.rows()), rng);
    const double initial = (predict(start, x.data) - x.data).squaredNorm();
    const TrainResult r = train(x, c);
    const double final = (predict(r.params, x.data) - x.data).squaredNorm();
    EXPECT_LT(final, initial / 10.0);
}

TEST(Train, DescentBoxAndEndpointProperties) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const ObservedMatrix x = small_problem(10 + seed);
        TrainConfig c = small_config(60);
        c.seed = seed;
        const TrainResult r = train(x, c, [&](const EpochRecord& rec) {
            if (rec.retries == 0) {
                EXPECT_LE(rec.q_value, rec.q_prev + 1e-9 * (1.0 + std::abs(rec.q_prev))) << "epoch " << rec.epoch;
            }
        });
        EXPECT_LE(flatten(r.params).cwiseAbs().maxCoeff(), c.schedule.box_m);
        ASSERT_FALSE(r.records.empty());
        EXPECT_LE(r.records.back().q_value, r.initial_q);
    }
}

TEST(Train, BoxIsActiveWhenTight) {
    const ObservedMatrix x = small_problem(20);
    TrainConfig c = small_config(30);
    c.schedule.box_m = 0.05;
    const TrainResult r = train(x, c);
    EXPECT_LE(flatten(r.params).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Train, DeterministicRecords) {
    const ObservedMatrix x = small_problem(21);
    const TrainConfig c = small_config(40);
    const TrainResult a = train(x, c);
    const TrainResult b = train(x, c);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(std::memcmp(&a.records[i].q_value, &b.records[i].q_value, sizeof(double)), 0);
        EXPECT_EQ(a.records[i].lipschitz_theta, b.records[i].lipschitz_theta);
        EXPECT_EQ(a.records[i].omega, b.records[i].omega);
        EXPECT_EQ(a.records[i].c1, b.records[i].c1);
    }
    EXPECT_TRUE(a.params == b.params);
}

TEST(Train, MatchesReferenceTrace) {
    const ObservedMatrix x = small_problem(22);
    for (double omega : {0.0, 0.3}) {
        TrainConfig c = small_config(25);
        c.schedule.warm_epochs = 25;
        c.schedule.omega = OmegaPolicy::constant(omega);
        const TrainResult r = train(x, c);
        const std::vector<double> ref = reference_q_trace(x, c);
        ASSERT_EQ(r.records.size(), ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k)
            EXPECT_NEAR(r.records[k].q_value, ref[k], 1e-10 * std::abs(ref[k])) << "epoch " << k + 1;
    }
}

TEST(Train, StepSizesFollowLipschitz) {
    const ObservedMatrix x = small_problem(23);
    const TrainConfig c = small_config(20);
    const TrainResult r = train(x, c);
    for (const EpochRecord& rec : r.records) {
        EXPECT_DOUBLE_EQ(rec.mu_theta, 1.0 / (c.schedule.gamma * rec.lipschitz_theta));
        EXPECT_GE(rec.omega, 0.0);
        EXPECT_LT(rec.omega, 0.5);
    }
}

TEST(Train, SummableIncrements) {
    const ObservedMatrix x = small_problem(24);
    TrainConfig c = small_config(500);
    c.schedule.warm_epochs = 500;
    const TrainResult r = train(x, c);
    ASSERT_EQ(r.records.size(), 500u);
    double total = 0.0;
    double tail = 0.0;
    for (const EpochRecord& rec : r.records) {
        ASSERT_TRUE(std::isfinite(rec.theta_step_sq));
        total += rec.theta_step_sq;
        if (rec.epoch > 450) tail += rec.theta_step_sq;
    }
    EXPECT_GT(total, 0.0);
    EXPECT_LT(tail, 0.05 * total);
}

TEST(Complete, SelectsByMask) {
    Rng rng(25);
    const NetworkParams p = init_network(shape_of({4, 3, 4}), rng);
    const Matrix data = rng.normal_matrix(4, 5);
    const Matrix mask = testutil::random_mask(4, 5, 0.5, rng);
    const ObservedMatrix x = ObservedMatrix::from(data, mask);
    const Matrix out = complete(p, x);
    const Matrix pred = predict(p, x.data);
    for (Index k = 0; k < out.size(); ++k)
        EXPECT_EQ(out.data()[k], mask.data()[k] != 0.0 ? x.data.data()[k] : pred.data()[k]);
    EXPECT_EQ(complete(p, ObservedMatrix::full(data)), data);
    EXPECT_EQ(complete(p, ObservedMatrix::from(data, Matrix::Zero(4, 5))), predict(p, Matrix::Zero(4, 5)));
}
