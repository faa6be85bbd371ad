#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace cpd {

enum class Execution { Serial, Parallel };

// Runs body(i) for i in [0, count). With Execution::Parallel the loop is an
// OpenMP worksharing loop; the exception from the lowest failing index is
// rethrown after the loop so both policies fail identically.
template <class Body>
void for_each_index(std::size_t count, Execution policy, Body&& body) {
  std::vector<std::exception_ptr> errors(count);
  const auto total = static_cast<long long>(count);
  if (policy == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < total; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    for (long long i = 0; i < total; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int worker_count();

}  // namespace cpd
