#include <benchmark/benchmark.h>

#include "dnnsr/baselines.hpp"
#include "dnnsr/datasets.hpp"
#include "dnnsr/fcnn.hpp"
#include "dnnsr/prox.hpp"

namespace {

using namespace dnnsr;

void BM_Svd(benchmark::State& state) {
    Rng rng(1);
    const Matrix a = rng.normal_matrix(state.range(0), state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(svd(a));
}
BENCHMARK(BM_Svd)->Args({64, 64})->Args({256, 300})->Args({300, 200})->Unit(benchmark::kMillisecond);

void BM_Svt(benchmark::State& state) {
    Rng rng(2);
    const Matrix a = rng.normal_matrix(state.range(0), state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(prox::svt(a, 1.0));
}
BENCHMARK(BM_Svt)->Args({64, 300})->Args({256, 300})->Unit(benchmark::kMillisecond);

void BM_SoftThreshold(benchmark::State& state) {
    Rng rng(3);
    const Matrix a = rng.normal_matrix(state.range(0), 200);
    for (auto _ : state) benchmark::DoNotOptimize(prox::soft_threshold(a, 0.1));
}
BENCHMARK(BM_SoftThreshold)->Arg(64)->Arg(256);

struct Fixture {
    NetworkParams params;
    ObservedMatrix x;
    AuxState aux;
    PenaltyWeights weights;

    explicit Fixture(const std::vector<Index>& hidden) {
        Rng rng(4);
        NetworkShape shape{{300}, Activation::tanh, Activation::identity};
        shape.layer_dims.insert(shape.layer_dims.end(), hidden.begin(), hidden.end());
        shape.layer_dims.push_back(300);
        params = init_network(shape, rng);
        x = apply_mask(gen_synthetic(300, 200, 10, 5), 0.5, 6);
        aux = anchored_aux(params, forward(params, x.data));
        weights = PenaltyWeights::uniform(hidden.size(), 1.0, 1e-3);
    }
};

void BM_Forward(benchmark::State& state) {
    const Fixture f({state.range(0), state.range(1), state.range(0)});
    for (auto _ : state) benchmark::DoNotOptimize(forward(f.params, f.x.data));
}
BENCHMARK(BM_Forward)->Args({64, 10})->Args({256, 128})->Unit(benchmark::kMillisecond);

void BM_Gradient(benchmark::State& state) {
    const Fixture f({state.range(0), state.range(1), state.range(0)});
    for (auto _ : state)
        benchmark::DoNotOptimize(value_and_grad_theta(f.params, f.x.data, f.x.mask, f.aux, f.weights));
}
BENCHMARK(BM_Gradient)->Args({64, 10})->Args({256, 128})->Unit(benchmark::kMillisecond);

void BM_SoftImpute(benchmark::State& state) {
    const ObservedMatrix x = apply_mask(gen_synthetic(300, 200, 10, 7), 0.5, 8);
    for (auto _ : state) benchmark::DoNotOptimize(soft_impute(x, SoftImputeConfig{10.0, 20, 1e-12}));
}
BENCHMARK(BM_SoftImpute)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
