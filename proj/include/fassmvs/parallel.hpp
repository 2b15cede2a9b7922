#pragma once

#include <functional>

namespace fassmvs {

// Number of workers: FASSMVS_THREADS environment variable if set (>=1),
// otherwise the hardware concurrency.
int worker_count();

// Runs fn(i) for i in [begin, end) on worker_count() threads. Callers must
// write disjoint outputs per index; results are then independent of the
// schedule, which is what the bit-identical parallelism contract relies on.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace fassmvs
