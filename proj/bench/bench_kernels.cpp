#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "offat/kernels.hpp"

using namespace offat;

namespace {

std::vector<std::vector<std::string>> candidates(std::size_t n) {
    std::mt19937_64 g(1);
    std::vector<std::vector<std::string>> out(n);
    for (auto& c : out)
        for (int k = static_cast<int>(g() % 8); k-- > 0;) c.push_back("k" + std::to_string(g() % 40));
    for (auto& c : out) {
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
    }
    return out;
}

const std::vector<std::string> kLocal = {"k1", "k3", "k5", "k7", "k11"};

sim::Scenario pair_scenario() {
    return sim::Scenario::from_json({{"duration_ms", 20'000},
                                     {"devices",
                                      {{{"id", "a"}, {"interests", "x"}, {"pos", {0, 0}}},
                                       {{"id", "b"}, {"interests", "x"}, {"pos", {50, 0}}}}},
                                     {"script",
                                      {{{"at_ms", 0}, {"device", "a"}, {"action", "start_discovery"}},
                                       {{"at_ms", 0}, {"device", "b"}, {"action", "start_discovery"}}}}});
}

void similarity_serial(benchmark::State& state) {
    const auto c = candidates(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::similarity_batch_serial(kLocal, c));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void similarity_parallel(benchmark::State& state) {
    const auto c = candidates(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::similarity_batch(kLocal, c));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void latency_serial(benchmark::State& state) {
    const auto sc = pair_scenario();
    for (auto _ : state)
        benchmark::DoNotOptimize(kernels::discovery_latency_serial(static_cast<std::size_t>(state.range(0)), sc, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void latency_parallel(benchmark::State& state) {
    const auto sc = pair_scenario();
    for (auto _ : state)
        benchmark::DoNotOptimize(kernels::discovery_latency(static_cast<std::size_t>(state.range(0)), sc, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(similarity_serial)->Arg(100'000)->Unit(benchmark::kMillisecond);
BENCHMARK(similarity_parallel)->Arg(100'000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(latency_serial)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(latency_parallel)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
