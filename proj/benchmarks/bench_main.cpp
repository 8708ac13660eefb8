#include <benchmark/benchmark.h>

#include <cmath>
#include <numeric>

#include "bicsignal/logistic.hpp"
#include "bicsignal/search.hpp"
#include "bicsignal/synthetic.hpp"

using namespace bicsignal;

namespace {

SyntheticData make_data(std::size_t n, std::size_t p) {
    SyntheticSpec spec;
    spec.n = n;
    spec.prevalence.assign(p, 0.1);
    spec.intercept = -2.0;
    spec.effects = {{0, 1.5}, {1, 1.0}, {2, -1.0}};
    return generate_synthetic(spec, 1);
}

std::vector<std::uint32_t> first(std::size_t k) {
    std::vector<std::uint32_t> v(k);
    std::iota(v.begin(), v.end(), 0U);
    return v;
}

void BM_LoglikWeighted(benchmark::State& state) {
    const auto gen = make_data(static_cast<std::size_t>(state.range(0)), 8);
    const auto pt = compress_profiles(gen.data.reports, gen.data.events[0], first(5));
    const CoefficientVector beta{-2.0, {1.5, 1.0, -1.0, 0.1, 0.0}};
    for (auto _ : state) benchmark::DoNotOptimize(loglik_weighted(pt, beta));
    state.counters["profiles"] = static_cast<double>(pt.m());
}
BENCHMARK(BM_LoglikWeighted)->Arg(10000)->Arg(100000);

void BM_LoglikRowSum(benchmark::State& state) {
    const auto gen = make_data(static_cast<std::size_t>(state.range(0)), 8);
    const auto& x = gen.data.reports;
    const auto& y = gen.data.events[0].y;
    const double slopes[8] = {1.5, 1.0, -1.0, 0.1, 0.0, 0.0, 0.0, 0.0};
    for (auto _ : state) {
        double ll = 0.0;
        for (std::size_t i = 0; i < x.n(); ++i) {
            double eta = -2.0;
            for (auto j : x.rows[i])
                if (j < 5) eta += slopes[j];
            ll += y[i] * eta - (std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))));
        }
        benchmark::DoNotOptimize(ll);
    }
}
BENCHMARK(BM_LoglikRowSum)->Arg(10000)->Arg(100000);

void BM_CompressProfiles(benchmark::State& state) {
    const auto gen = make_data(20000, 20);
    const auto mask = eligibility_mask(gen.data.reports, gen.data.events[0]);
    EventData working(gen.data.reports, gen.data.events[0], mask);
    const auto selected = first(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(compress_profiles(working, selected));
}
BENCHMARK(BM_CompressProfiles)->Arg(1)->Arg(5)->Arg(10);

void BM_FitMle(benchmark::State& state) {
    const auto gen = make_data(20000, 20);
    const auto pt = compress_profiles(gen.data.reports, gen.data.events[0], first(static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(fit_mle(pt));
}
BENCHMARK(BM_FitMle)->Arg(1)->Arg(5)->Arg(10);

void BM_Chain(benchmark::State& state) {
    const auto gen = make_data(5000, 15);
    const auto mask = eligibility_mask(gen.data.reports, gen.data.events[0]);
    EventData working(gen.data.reports, gen.data.events[0], mask);
    ChainConfig cfg;
    cfg.iterations = static_cast<std::size_t>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        ModelScorer scorer(working);  // cold cache each chain
        benchmark::DoNotOptimize(run_chain(scorer, cfg, seed++));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Chain)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
