#pragma once

#include <cstddef>
#include <functional>

namespace neurodrive {

/// NEURODRIVE_THREADS if set to a positive integer, else the hardware count.
std::size_t worker_count();

/// Runs fn(0..n-1) on up to `workers` threads (0 = worker_count()). If any
/// call throws, the exception from the lowest index is rethrown after all
/// workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t workers = 0);

}  // namespace neurodrive
