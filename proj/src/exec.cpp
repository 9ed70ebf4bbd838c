#include "emucal/exec.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace emucal {

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int thread_count() { return omp_get_max_threads(); }

int threads_from_env() {
  const char* value = std::getenv("EMUCAL_THREADS");
  if (value == nullptr) return 0;
  try {
    int n = std::stoi(value);
    return n > 0 ? n : 0;
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace emucal
