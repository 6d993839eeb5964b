#pragma once

#include <cstddef>
#include <functional>

namespace guidelab {

// Number of workers used when a caller passes 0.
int default_workers();

// Runs fn(i) for i in [0, n) on `workers` threads (0 = default). Each index is
// visited exactly once; callers write results by index so the output does not
// depend on scheduling. If any call throws, the exception from the lowest
// failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace guidelab
