#pragma once

#include <cstddef>
#include <functional>

namespace pepakit {

/// Worker count: PEPAKIT_THREADS if set and positive, otherwise the hardware
/// concurrency (at least 1).
std::size_t worker_threads();

/// Runs body(0..n-1) on up to worker_threads() threads. Each index is run
/// exactly once; callers write results into per-index slots so the output
/// order never depends on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace pepakit
