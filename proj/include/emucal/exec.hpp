#pragma once

#include <cstddef>
#include <exception>

namespace emucal {

/// Selects between the serial reference loop and the OpenMP kernel.
/// Both paths must produce identical results; the serial one is kept for tests.
enum class ExecPolicy { Serial, Parallel };

/// Sets the OpenMP thread count; n <= 0 leaves the runtime default.
void set_thread_count(int n);

int thread_count();

/// Thread count from the EMUCAL_THREADS environment variable, or 0 if unset/invalid.
int threads_from_env();

/// body(i) for i in [0, n). Iterations must be independent. The first
/// exception thrown by any iteration is rethrown after the loop.
template <typename F>
void for_each_index(std::ptrdiff_t n, ExecPolicy policy, F&& body) {
  if (policy == ExecPolicy::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(emucal_exec_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace emucal
