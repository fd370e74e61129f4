#pragma once

#include <cstddef>
#include <functional>

namespace genprior {

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware concurrency).
/// Work is claimed dynamically; callers write results by index so output order never
/// depends on scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace genprior
