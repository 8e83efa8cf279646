#pragma once

#include <cstddef>
#include <functional>

namespace rpavg {

// 0 means "all hardware threads".
unsigned resolve_workers(unsigned requested);

// Runs body(i) for i in [0, n). Callers write results into slot i and reduce
// afterwards in index order, so output never depends on the worker count.
// The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace rpavg
