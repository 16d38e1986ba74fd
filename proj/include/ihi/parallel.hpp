#pragma once

#include <cstddef>
#include <functional>

namespace ihi {

/// Worker count for parallel loops. Defaults to IHI_THREADS, else the number
/// of logical cores.
std::size_t thread_count();
void set_thread_count(std::size_t count);

/// Runs fn(i) for i in [begin, end) over contiguous static chunks. Each index
/// must write only its own outputs; results never depend on the worker count.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

}  // namespace ihi
