#pragma once

#include <cstddef>
#include <functional>

namespace igdist {

/// Runs body(i) for every i in [0, count) on `workers` threads. Work is handed
/// out by index, so callers that write into slot i and reduce in index order
/// get results independent of the worker count. The exception from the lowest
/// failing index is rethrown after all workers stop.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

}  // namespace igdist
