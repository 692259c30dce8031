#pragma once

#include <cstddef>
#include <functional>

namespace mapseg {

// Worker cap: MAPSEG_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Results must be written to per-index slots;
// scheduling order is unspecified. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mapseg
