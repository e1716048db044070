#pragma once

#include <cstddef>
#include <functional>

namespace kinfluid {

// Worker count: min(SIM_THREADS, hardware_concurrency), at least 1.
int worker_count();

// Static partition of [0, n) into worker_count() contiguous chunks; fn is called
// as fn(begin, end, worker_id). Chunk boundaries depend only on (n, workers), and
// callers reduce per-worker buffers in worker order, so results are reproducible
// for a fixed worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& fn);

}  // namespace kinfluid
