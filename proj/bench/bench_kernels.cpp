#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "pedcc/frame.hpp"
#include "pedcc/geometry.hpp"
#include "pedcc/loss.hpp"
#include "pedcc/mahalanobis.hpp"
#include "pedcc/net.hpp"
#include "pedcc/rng.hpp"

namespace {

using namespace pedcc;

constexpr int kClasses = 10;
constexpr int kInputDim = 8;
constexpr int kFeatureDim = 16;
constexpr std::size_t kRows = 8192;

struct bench_data {
    centroid_frame frame;
    embedding_set input;
    mlp model;
    embedding_set features;
    mahalanobis_model maha;
    loss_params params;
};

const bench_data& data() {
    static const bench_data d = [] {
        bench_data b;
        b.frame = generate_frame(kClasses, kFeatureDim, 1);

        b.input.dim = kInputDim;
        b.input.role = data_role::train;
        rng gen(mix_seed(2024, 0x62656e63));
        std::vector<double> row(kInputDim);
        for (std::size_t i = 0; i < kRows; ++i) {
            for (double& v : row) v = gen.normal();
            b.input.push_row(row.data(), static_cast<int>(i % kClasses));
        }

        network_spec spec;
        spec.input_dim = kInputDim;
        spec.hidden_dims = {64, 64};
        spec.feature_dim = kFeatureDim;
        spec.activation = activation_kind::relu;
        spec.seed = 7;
        b.model = init_mlp(spec);

        b.features = embed_serial(b.model, b.input);
        b.maha = mahalanobis_fit(b.features);
        return b;
    }();
    return d;
}

void bm_score_batch(benchmark::State& state) {
    const bench_data& b = data();
    for (auto _ : state) {
        auto r = score_batch(b.features, b.frame, 1.0);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(kRows));
}

void bm_score_batch_serial(benchmark::State& state) {
    const bench_data& b = data();
    for (auto _ : state) {
        auto r = score_batch_serial(b.features, b.frame, 1.0);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(kRows));
}

void bm_loss(benchmark::State& state) {
    const bench_data& b = data();
    for (auto _ : state) {
        auto r = pedcc_loss(b.features.data, b.features.labels, b.frame, b.params);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(kRows));
}

void bm_loss_serial(benchmark::State& state) {
    const bench_data& b = data();
    for (auto _ : state) {
        auto r = pedcc_loss_serial(b.features.data, b.features.labels, b.frame, b.params);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(kRows));
}

void bm_embed(benchmark::State& state) {
    const bench_data& b = data();
    for (auto _ : state) {
        auto r = embed(b.model, b.input);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(kRows));
}

void bm_embed_serial(benchmark::State& state) {
    const bench_data& b = data();
    for (auto _ : state) {
        auto r = embed_serial(b.model, b.input);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(kRows));
}

void bm_mahalanobis(benchmark::State& state) {
    const bench_data& b = data();
    for (auto _ : state) {
        auto r = mahalanobis_score_batch(b.maha, b.features);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(kRows));
}

void bm_mahalanobis_serial(benchmark::State& state) {
    const bench_data& b = data();
    for (auto _ : state) {
        auto r = mahalanobis_score_batch_serial(b.maha, b.features);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(kRows));
}

} // namespace

BENCHMARK(bm_score_batch);
BENCHMARK(bm_score_batch_serial);
BENCHMARK(bm_loss);
BENCHMARK(bm_loss_serial);
BENCHMARK(bm_embed);
BENCHMARK(bm_embed_serial);
BENCHMARK(bm_mahalanobis);
BENCHMARK(bm_mahalanobis_serial);

BENCHMARK_MAIN();
