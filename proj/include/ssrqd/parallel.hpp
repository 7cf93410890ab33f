#pragma once

#include <cstdint>
#include <exception>
#include <functional>

namespace ssrqd {

// Worker count precedence: explicit request > SSRQD_THREADS > hardware
// concurrency.  Always returns at least 1.
int resolve_worker_count(int requested);

// Runs fn(trial) for trial in [0, trials) across `workers` threads in
// contiguous index blocks.  Each trial must be independent (results written
// to preallocated per-trial slots); with that discipline the aggregate output
// is identical for every worker count.  The first exception thrown by any
// worker is rethrown on the calling thread.
void parallel_for_trials(std::int64_t trials, int workers,
                         const std::function<void(std::int64_t)>& fn);

}  // namespace ssrqd
