#include <benchmark/benchmark.h>

#include "fssfda/augment.hpp"
#include "fssfda/distributions.hpp"
#include "fssfda/model.hpp"
#include "fssfda/nn.hpp"
#include "fssfda/rng.hpp"
#include "fssfda/selection.hpp"

using namespace fssfda;

namespace {

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(rng.normal(0.0, 1.0));
    return t;
}

LabelDistribution random_dist(int k, std::uint64_t seed) {
    Rng rng(seed);
    LabelDistribution d;
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        d.probs.push_back(rng.uniform() + 1e-3);
        sum += d.probs.back();
    }
    for (auto& v : d.probs) v /= sum;
    return d;
}

}  // namespace

static void BM_Bhattacharyya(benchmark::State& state) {
    auto p = random_dist(static_cast<int>(state.range(0)), 1);
    auto q = random_dist(static_cast<int>(state.range(0)), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(bhattacharyya_distance(p, q));
    }
}
BENCHMARK(BM_Bhattacharyya)->Arg(20)->Arg(65)->Arg(1000);

static void BM_SndScore(benchmark::State& state) {
    Tensor f = random_tensor({static_cast<int>(state.range(0)), 64}, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(snd_score(f, 0.05));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SndScore)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNSquared);

static void BM_GemmNN(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Tensor a = random_tensor({n, n}, 5);
    Tensor b = random_tensor({n, n}, 6);
    Tensor c({n, n});
    for (auto _ : state) {
        nn::gemm_nn(a.data(), b.data(), c.data(), n, n, n, false);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
}
BENCHMARK(BM_GemmNN)->Arg(64)->Arg(128)->Arg(256);

static void BM_SmallCnnForward(benchmark::State& state) {
    ModelSpec spec;
    spec.backbone_id = "small_cnn";
    spec.bottleneck_dim = 64;
    spec.n_classes = 4;
    AdaptableModel model(spec);
    Tensor x = random_tensor({static_cast<int>(state.range(0)), 3, 32, 32}, 7);
    for (auto _ : state) {
        Tensor logits = model.forward(x, false);
        benchmark::DoNotOptimize(logits.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SmallCnnForward)->Arg(1)->Arg(16)->Arg(32);

static void BM_AugmentTrain(benchmark::State& state) {
    Rng rng(9);
    Image img;
    img.width = 64;
    img.height = 64;
    img.pixels.resize(64 * 64 * 3);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    AugmentConfig cfg;
    cfg.crop = 32;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        Tensor t = augment(img, true, seed++, cfg);
        benchmark::DoNotOptimize(t.data());
    }
}
BENCHMARK(BM_AugmentTrain);

BENCHMARK_MAIN();
