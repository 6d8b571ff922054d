#pragma once

#include <cstddef>
#include <functional>

namespace facecamo {

// Default worker count: hardware concurrency, at least 1.
int default_jobs();

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index runs exactly
// once; the first exception thrown is rethrown after all workers join.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace facecamo
