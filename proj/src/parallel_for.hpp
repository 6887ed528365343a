#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace dgs::detail {

// Runs body(i) for i in [0, n) across OpenMP threads. Exceptions cannot cross
// an OpenMP region, so each is captured per index and the one with the lowest
// index is rethrown afterwards, matching what a sequential loop would raise.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace dgs::detail
