#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace advicl {

enum class Execution { Serial, Parallel };

// Runs body(i) for i in [0, n). With Execution::Parallel the iterations are
// spread over OpenMP threads; the first exception thrown by any iteration is
// rethrown on the calling thread once the loop has drained.
template <typename Body>
void for_each_index(std::size_t n, Execution exec, Body&& body) {
  if (exec == Execution::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first;
  std::mutex guard;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(guard);
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace advicl
