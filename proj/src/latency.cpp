#include "offat/kernels.hpp"
#include "offat/simnet.hpp"

#include <algorithm>

namespace offat::sim {
namespace {

// Nearest-rank percentile over the sorted samples.
std::optional<TimeMs> percentile(const std::vector<TimeMs>& sorted, double q) {
    if (sorted.empty()) return std::nullopt;
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

}  // namespace

std::optional<TimeMs> LatencyStats::min() const { return percentile(samples, 0.0); }
std::optional<TimeMs> LatencyStats::median() const { return percentile(samples, 0.5); }
std::optional<TimeMs> LatencyStats::p99() const { return percentile(samples, 0.99); }

double LatencyStats::success_rate(TimeMs limit_ms) const {
    if (samples.empty()) return 0.0;
    auto ok = std::count_if(samples.begin(), samples.end(), [&](TimeMs t) { return t <= limit_ms; });
    return static_cast<double>(ok) / static_cast<double>(samples.size());
}

nlohmann::json LatencyStats::to_json() const {
    auto ms = [](std::optional<TimeMs> v) -> nlohmann::json {
        if (!v) return nullptr;
        if (*v == kNever) return "inf";
        return *v;
    };
    return {{"runs", runs},   {"pairs", samples.size()}, {"failures", failures},
            {"min_ms", ms(min())}, {"median_ms", ms(median())}, {"p99_ms", ms(p99())}};
}

LatencyStats measure_discovery_latency(std::size_t n_runs, const Scenario& scenario, std::uint64_t base_seed) {
    LatencyStats stats;
    stats.runs = n_runs;
    stats.samples = kernels::discovery_latency(n_runs, scenario, base_seed);
    std::sort(stats.samples.begin(), stats.samples.end());
    stats.failures = static_cast<std::size_t>(std::count(stats.samples.begin(), stats.samples.end(), kNever));
    return stats;
}

}  // namespace offat::sim
