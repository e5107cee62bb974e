#pragma once

#include <cstddef>
#include <functional>

namespace rdskit {

/// Worker count from RDSKIT_WORKERS, else std::thread::hardware_concurrency().
std::size_t default_workers();

/// Runs fn(0..count-1) on up to `workers` threads. Each index must write only
/// to its own output slot. If any call throws, the exception from the lowest
/// failing index is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace rdskit
