#pragma once

#include <functional>

namespace geotubes::detail {

// Runs task(0..count-1) on a small thread pool. Each index is processed exactly once;
// the first exception is rethrown after all workers stop.
void run_parallel(int count, unsigned threads, const std::function<void(int)>& task);

}  // namespace geotubes::detail
