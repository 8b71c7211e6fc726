#pragma once

#include <cstddef>
#include <functional>

namespace hollow {

/// Default worker count: HOLLOW_THREADS if set, else hardware concurrency.
int default_thread_count();

/// Runs fn(i) for i in [0, count). Work items are independent; callers that
/// need a deterministic result write into per-item slots and reduce them in
/// index order afterwards, which makes the outcome independent of `threads`.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

} // namespace hollow
