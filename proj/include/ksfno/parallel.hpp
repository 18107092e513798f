#pragma once

#include <cstddef>
#include <functional>

namespace ksfno {

/// Worker-thread cap: KSFNO_THREADS if set to a positive integer, otherwise
/// std::thread::hardware_concurrency() (at least 1).
std::size_t worker_threads();

/// Runs body(i) for every i in [0, count) on up to `threads` threads. Work is
/// split into contiguous chunks; each index is visited exactly once. The first
/// exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace ksfno
