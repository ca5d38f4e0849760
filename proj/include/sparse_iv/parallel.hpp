#pragma once

#include <cstddef>
#include <functional>

namespace siv {

/// Resolves a requested worker count: positive values are taken as is,
/// otherwise SPARSE_IV_THREADS is consulted, then the hardware concurrency.
int resolve_threads(int requested);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Jobs must
/// write only to their own output slots; the first exception thrown by any
/// job is rethrown on the calling thread after all workers join.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace siv
