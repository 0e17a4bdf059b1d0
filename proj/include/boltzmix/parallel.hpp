// Deterministic fork-join helpers for the node loops.
//
// Work is split into static contiguous chunks, one per worker, so a given
// thread count always produces the same partition and the same floating
// point reduction order.

#pragma once

#include <cstdint>
#include <functional>

namespace boltzmix {

// Number of workers: BOLTZMIX_THREADS if set, else hardware concurrency.
int worker_count();

// Calls fn(worker_id, begin, end) concurrently over a static partition of
// [0, n). fn must only write to worker-private state.
void parallel_chunks(std::int64_t n, const std::function<void(int, std::int64_t, std::int64_t)>& fn);

}  // namespace boltzmix
