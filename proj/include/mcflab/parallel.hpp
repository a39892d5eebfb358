#pragma once

#include <cstddef>
#include <functional>

namespace mcflab {

/// Worker count: MCFLAB_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
unsigned thread_count();

/// Runs body(k) for k in [0, n) on thread_count() workers in contiguous blocks.
/// Iterations must write to disjoint state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mcflab
