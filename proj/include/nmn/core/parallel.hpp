#pragma once

#include <cstddef>
#include <exception>
#include <string_view>
#include <vector>

#ifdef NMN_HAVE_OPENMP
#include <omp.h>
#endif

namespace nmn::core {

/// Serial is the reference path; OpenMP must produce byte-identical results.
enum class ExecPolicy { Serial, OpenMP };

ExecPolicy parse_exec_policy(std::string_view name);
std::string_view exec_policy_name(ExecPolicy p);
int max_threads();

/// Runs f(i) for i in [0, n). Each index must write only its own output slot;
/// reductions are done by the caller afterwards in index order. If any f(i)
/// throws, the exception from the lowest index is rethrown.
template <class F>
void parallel_for(std::size_t n, ExecPolicy policy, F&& f) {
  if (policy == ExecPolicy::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) {
      f(i);
    }
    return;
  }
#ifdef NMN_HAVE_OPENMP
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
#else
  for (std::size_t i = 0; i < n; ++i) {
    f(i);
  }
#endif
}

}  // namespace nmn::core
