#pragma once

#include <functional>

namespace nesslab {

/// Runs fn(i) for i in [0, count) on up to jobs worker threads.  Work is
/// handed out through a shared atomic counter; the first exception thrown by
/// any worker is rethrown once all workers have stopped.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

}  // namespace nesslab
