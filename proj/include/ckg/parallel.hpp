#pragma once

#include <functional>

namespace ckg {

/// Worker count: CKG_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads in
/// contiguous blocks.  The body must only write to slots owned by i.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace ckg
