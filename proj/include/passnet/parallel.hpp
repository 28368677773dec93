#pragma once

#include <cstddef>
#include <functional>

namespace passnet {

/// Worker count: PASSNET_LAB_THREADS if set and positive, else hardware
/// concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index is handled exactly once; callers
/// write results into index-addressed slots so output is independent of
/// scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace passnet
