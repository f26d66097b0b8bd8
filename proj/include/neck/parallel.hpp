#pragma once

#include <cstddef>
#include <functional>

namespace neck {

// Worker count: NECK_THREADS if set and positive, otherwise the hardware concurrency.
unsigned worker_count();

// Calls fn(i) for i in [0, n) on up to worker_count() threads. The first exception
// thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace neck
