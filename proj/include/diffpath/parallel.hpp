#pragma once

#include <cstddef>
#include <functional>

namespace diffpath {

// Worker count used by parallel_for; 0 means hardware concurrency.
void set_max_workers(unsigned n);
unsigned max_workers();

// Runs fn(begin, end) over a partition of [0, n) on up to max_workers()
// threads. Chunks are contiguous and disjoint, so workers writing to
// per-index output slots need no synchronization and results do not depend
// on the worker count. The first exception thrown by any chunk is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace diffpath
