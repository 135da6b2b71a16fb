#pragma once

#include <cstddef>
#include <functional>

namespace loyalty {

// Worker count: hardware concurrency, capped by LOYALTY_TOPO_THREADS when set.
std::size_t worker_count();

// Runs body(i) for every i in [0, n). Each index must write only its own output
// slot; results are then independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace loyalty
