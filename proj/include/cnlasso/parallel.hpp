#pragma once

#include <functional>

namespace cnlasso {

// Runs fn(0), ..., fn(count-1) on up to `threads` workers. Each call must
// write only to its own output slot, so the result is identical for any
// thread count or schedule.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace cnlasso
