#pragma once

#include <cstddef>
#include <functional>

namespace onecomp {

// Worker count from ONECOMP_WORKERS, else the hardware concurrency (>= 1).
std::size_t default_workers();

// Runs body(i) for i in [0, n) over `workers` threads using static
// interleaved assignment. Results must not depend on the assignment.
// The first exception thrown by any body is rethrown after all threads join.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace onecomp
