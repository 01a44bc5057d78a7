#pragma once

#include <cstddef>
#include <functional>

namespace lightray {

/// Worker count from LIGHTRAY_THREADS (unset or 0 means hardware concurrency).
std::size_t worker_count();

/// Runs body(i) for i in [0, count). Iterations must write disjoint outputs;
/// results are then independent of the schedule. If any iteration throws, the
/// exception from the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace lightray
