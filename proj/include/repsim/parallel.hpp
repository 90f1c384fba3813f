#pragma once

#include <cstddef>
#include <functional>

namespace repsim {

// Global worker cap, settable from the CLI (--threads). Numeric results
// must not depend on this value: work items write to disjoint output
// slots and all reductions happen after the join.
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs fn(i) for i in [0, n), statically chunked over the worker pool.
// fn must only touch state owned by item i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace repsim
