#pragma once

#include <cstddef>
#include <functional>

namespace flowsentinel {

/// Worker count: FLOWSENTINEL_THREADS when set to a positive integer,
/// otherwise std::thread::hardware_concurrency() (at least 1).
std::size_t thread_budget();

/// Runs body(i) for every i in [0, n) on up to thread_budget() threads.
/// Work is split into contiguous blocks; callers that need determinism
/// write results by index and never depend on completion order. The first
/// exception thrown by any worker is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace flowsentinel
