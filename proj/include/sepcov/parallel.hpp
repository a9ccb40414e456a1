#pragma once

#include <cstddef>
#include <functional>

namespace sepcov {

/// Worker count used by parallel loops; 0 means hardware concurrency.
void set_thread_count(unsigned n);
[[nodiscard]] unsigned thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads.
/// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sepcov
