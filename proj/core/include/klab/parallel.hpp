#pragma once

#include <functional>

namespace klab {

// Runs fn(0) .. fn(count-1) on up to `workers` threads (0 = hardware pick).
// Jobs are claimed from an atomic counter; the first exception thrown by any
// job is rethrown on the calling thread after all workers join. Callers that
// need deterministic output must write into per-index slots, never reduce
// in completion order.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

int default_worker_count();  // KLAB_WORKERS env var, else hardware_concurrency

}  // namespace klab
