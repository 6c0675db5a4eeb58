#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "offat/profile.hpp"
#include "offat/simnet.hpp"

// Data-parallel kernels. Each has a serial reference kept for testing and
// benchmarking; results must be identical.
namespace offat::kernels {

/// keyword_similarity of `local` against every candidate keyword list.
std::vector<int> similarity_batch_serial(std::span<const std::string> local,
                                         std::span<const std::vector<std::string>> candidates);
std::vector<int> similarity_batch(std::span<const std::string> local,
                                  std::span<const std::vector<std::string>> candidates);

/// One simulation per run; per-pair latencies in run order (kNever = failure).
std::vector<TimeMs> discovery_latency_serial(std::size_t n_runs, const sim::Scenario& scenario,
                                             std::uint64_t base_seed);
std::vector<TimeMs> discovery_latency(std::size_t n_runs, const sim::Scenario& scenario,
                                      std::uint64_t base_seed);

/// Number of threads the parallel kernels will use.
int worker_threads();

}  // namespace offat::kernels
