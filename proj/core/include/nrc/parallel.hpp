#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace nrc {

// Worker count from NRC_WORKERS, falling back to hardware concurrency.
std::size_t default_worker_count();

// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
// visited exactly once; callers write results into slot i so the merged output
// is independent of scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

// Deterministic seed derivation (splitmix64 over the inputs).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace nrc
