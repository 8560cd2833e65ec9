#ifndef CONFORMAL_KIT_PARALLEL_HPP
#define CONFORMAL_KIT_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace conformal {

/** Worker threads used by parallel_for: CONFORMAL_KIT_THREADS if set, else the hardware count. */
std::size_t worker_count();

/**
 * Runs body(0), ..., body(count - 1) across the worker pool, stealing indices
 * from a shared counter.  Each index must write only to its own output slot;
 * results are then independent of the thread count and interleaving.  The
 * first exception thrown by any body is rethrown on the caller.
 */
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace conformal

#endif  // CONFORMAL_KIT_PARALLEL_HPP
