#pragma once

#include <cstddef>
#include <functional>

namespace sinoplace {

// Process-wide cap on worker threads; 0 means hardware concurrency.
void set_thread_limit(unsigned n);
unsigned thread_limit();

// Runs body(i) for i in [0, n). Work is split into contiguous chunks, so any
// per-index output written by body is independent of scheduling. The first
// exception thrown by any chunk is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sinoplace
