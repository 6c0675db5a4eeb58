#include "offat/kernels.hpp"

#include <algorithm>

#if defined(OFFAT_HAVE_OPENMP)
#include <omp.h>
#endif

namespace offat::kernels {
namespace {

std::vector<TimeMs> one_run(const sim::Scenario& scenario, std::uint64_t seed) {
    sim::Simulation simulation(scenario, seed, false);
    simulation.run_until_discovered();
    const auto metrics = simulation.metrics();
    std::vector<TimeMs> out;
    std::size_t k = 0;
    const auto& devs = scenario.devices;
    for (std::size_t i = 0; i < devs.size(); ++i) {
        for (std::size_t j = i + 1; j < devs.size(); ++j, ++k) {
            if (!sim::in_range(devs[i].pos, devs[j].pos, scenario.radio)) continue;
            const auto& latency = metrics.discovery[k].latency_ms;
            out.push_back(latency ? *latency : kNever);
        }
    }
    return out;
}

}  // namespace

std::vector<int> similarity_batch_serial(std::span<const std::string> local,
                                         std::span<const std::vector<std::string>> candidates) {
    std::vector<int> out(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        out[i] = keyword_similarity(local, candidates[i]).value();
    }
    return out;
}

std::vector<int> similarity_batch(std::span<const std::string> local,
                                  std::span<const std::vector<std::string>> candidates) {
    std::vector<int> out(candidates.size());
    const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[i] = keyword_similarity(local, candidates[i]).value();
    }
    return out;
}

std::vector<TimeMs> discovery_latency_serial(std::size_t n_runs, const sim::Scenario& scenario,
                                             std::uint64_t base_seed) {
    std::vector<TimeMs> out;
    for (std::size_t r = 0; r < n_runs; ++r) {
        auto run = one_run(scenario, mix_seed(base_seed + r));
        out.insert(out.end(), run.begin(), run.end());
    }
    return out;
}

std::vector<TimeMs> discovery_latency(std::size_t n_runs, const sim::Scenario& scenario, std::uint64_t base_seed) {
    std::vector<std::vector<TimeMs>> per_run(n_runs);
    const auto n = static_cast<std::ptrdiff_t>(n_runs);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        per_run[r] = one_run(scenario, mix_seed(base_seed + static_cast<std::uint64_t>(r)));
    }
    std::vector<TimeMs> out;
    for (auto& run : per_run) out.insert(out.end(), run.begin(), run.end());
    return out;
}

int worker_threads() {
#if defined(OFFAT_HAVE_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace offat::kernels
