#pragma once

#include <cstdint>
#include <functional>

namespace sig {

/// Worker count for internal parallelism: SIG_THREADS when set (minimum 1),
/// otherwise the hardware concurrency.
int thread_count();

/// Runs body(begin, end) over [0, n) split into contiguous chunks of at most
/// `grain` items. Chunk boundaries depend only on n and grain, never on the
/// thread count, so any per-chunk results can be reduced in a fixed order.
void parallel_chunks(std::int64_t n, std::int64_t grain,
                     const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace sig
