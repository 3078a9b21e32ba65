#include <benchmark/benchmark.h>

#include <vector>

#include "itu/metrics.hpp"
#include "itu/rng.hpp"
#include "itu/tensor.hpp"
#include "itu/theory.hpp"
#include "itu/transforms.hpp"

namespace {

itu::Tensor random_tensor(const itu::Shape& shape, itu::Rng& rng) {
    std::vector<double> v(itu::shape_numel(shape));
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return itu::Tensor::from(shape, std::move(v));
}

void BM_Conv2d28(benchmark::State& state) {
    itu::Rng rng(1);
    const itu::Tensor x = random_tensor({32, 1, 28, 28}, rng);
    const itu::Tensor w = random_tensor({8, 1, 4, 4}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(itu::conv2d(x, w, 2, 1).data().data());
    }
}
BENCHMARK(BM_Conv2d28);

void BM_BlurUnit28(benchmark::State& state) {
    itu::Rng rng(2);
    const itu::Tensor x = random_tensor({32, 1, 28, 28}, rng);
    const itu::TransformUnit blur = itu::registry_get("blur:K_blur");
    for (auto _ : state) {
        benchmark::DoNotOptimize(blur.apply(x).data().data());
    }
}
BENCHMARK(BM_BlurUnit28);

void BM_Sharpness28(benchmark::State& state) {
    itu::Rng rng(3);
    std::vector<double> img(28 * 28);
    for (double& v : img) v = rng.uniform(-1.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(itu::metrics::sharpness(img, 28));
    }
}
BENCHMARK(BM_Sharpness28);

void BM_BruteForceOptimalD(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto p_data = itu::theory::DiscreteDensity1D::truncated_gaussian(-1, 1, m, 0, 0.5);
    const auto p_g = itu::theory::DiscreteDensity1D::uniform(-1, 1, m);
    const auto T = itu::theory::Map1D::tanh_map();
    for (auto _ : state) {
        benchmark::DoNotOptimize(itu::theory::brute_force_optimal_D(p_data, p_g, T).d.data());
    }
}
BENCHMARK(BM_BruteForceOptimalD)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
