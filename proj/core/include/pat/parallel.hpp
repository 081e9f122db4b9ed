#pragma once

#include <cstddef>
#include <functional>

namespace pat {

/// Process-wide cap on worker threads (default: hardware concurrency).
/// Every parallel loop in the toolkit writes disjoint outputs, so results do
/// not depend on this value.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs body(i) for i in [0, n), split into contiguous chunks over the
/// configured number of threads. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace pat
