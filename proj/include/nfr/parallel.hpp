#pragma once

#include <cstddef>
#include <functional>

namespace nfr {

// Thread cap, settable via set_max_threads or the NFR_THREADS env var.
int max_threads();
void set_max_threads(int n);

// Runs fn(i) for every i in [0, n). Each index is processed exactly once;
// callers must write to disjoint output slots so the result is independent
// of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace nfr
