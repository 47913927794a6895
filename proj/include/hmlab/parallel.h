#pragma once

#include <cstddef>
#include <functional>

namespace hmlab {

/// Worker count: HMLAB_THREADS when set (>= 1), otherwise the hardware
/// concurrency.
unsigned thread_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 means
/// thread_count()). Each index is visited exactly once; callers write
/// results into per-index slots so output never depends on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

}  // namespace hmlab
