#pragma once

#include <cstddef>
#include <functional>

namespace freqpde {

/// Worker cap: FREQPDE_THREADS if set (>=1), else hardware concurrency.
std::size_t thread_budget();

/// Runs fn(i) for i in [0, count). Work is split into contiguous chunks so
/// each index is processed by exactly one worker with the same inner order
/// as a serial loop; results are identical for any thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace freqpde
