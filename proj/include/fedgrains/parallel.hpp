#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace fedgrains {

// Effective worker count: hardware concurrency, optionally capped by the
// FEDGRAINS_THREADS environment variable and by `requested` (0 = no request).
int thread_budget(int requested = 0);

// Runs fn(0..n-1) across up to `threads` workers. Tasks must be independent;
// determinism comes from each task writing only its own slot.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace fedgrains
