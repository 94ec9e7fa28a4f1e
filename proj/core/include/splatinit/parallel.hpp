// SPDX-License-Identifier: Apache-2.0
// Minimal fork-join helper over a persistent thread pool.
//
// Work is split into contiguous slices whose boundaries depend only on the
// problem size and the slice count, never on scheduling. Callers that reduce
// floating point partials allocate one buffer per slice and merge them in
// slice order, which makes results reproducible for a fixed thread count.
// The pool size defaults to the hardware concurrency and can be capped with
// the SPLATINIT_THREADS environment variable (read once at startup).
#pragma once

#include <cstdint>
#include <functional>

namespace splatinit {

// Number of worker slices parallel_for_slices uses (>= 1).
int thread_count();

// Overrides the slice/worker count before the pool first runs (startup
// only): n >= 1 fixes the count exactly, n = 0 restores auto detection.
// Throws std::logic_error once thread_count() has been materialized.
void set_thread_count(int n);

// Runs fn(slice_index, begin, end) for thread_count() contiguous slices of
// [0, n). Slices may be empty when n < thread_count(). Blocks until done.
// With a single thread everything runs inline on the caller.
void parallel_for_slices(std::int64_t n,
                         const std::function<void(int, std::int64_t, std::int64_t)>& fn);

// Element convenience wrapper: fn(i) for i in [0, n), slice-parallel.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace splatinit
