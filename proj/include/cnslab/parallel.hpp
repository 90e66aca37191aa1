#pragma once

#include <cstddef>
#include <functional>

namespace cns {

/// Worker count: CNS_THREADS if set to a positive integer, else the hardware
/// concurrency (at least 1).
int worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Exceptions
/// are rethrown on the calling thread (the one with the lowest index wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cns
