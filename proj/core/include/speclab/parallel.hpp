#pragma once

#include <cstddef>
#include <functional>

namespace speclab {

/// Runs fn(i) for i in [0, count) on up to `jobs` worker threads.
/// jobs <= 1 runs inline; jobs == 0 uses the hardware concurrency.
/// The first exception thrown by any worker is rethrown after all join.
/// Callers are expected to write results into preallocated slots indexed
/// by i, which keeps scan outputs deterministic regardless of jobs.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace speclab
