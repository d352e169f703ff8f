#pragma once

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lossres {

enum class Execution { kSerial, kParallel };

struct ParallelOptions {
  Execution mode = Execution::kParallel;
  int workers = 0;  ///< 0 uses the OpenMP default
};

/// Worker count from LOSSRES_WORKERS, or 0 when unset or invalid.
inline int default_workers() {
  if (const char* env = std::getenv("LOSSRES_WORKERS")) {
    try {
      const int n = std::stoi(env);
      return n > 0 ? n : 0;
    } catch (...) {
      return 0;
    }
  }
  return 0;
}

/// Runs body(k) for k in [0, count). Each index must write only its own slot, so
/// the serial and parallel paths produce identical results. `body` must not throw.
template <typename Body>
void for_each_index(int count, const ParallelOptions& options, Body&& body) {
  if (options.mode == Execution::kSerial) {
    for (int k = 0; k < count; ++k) body(k);
    return;
  }
#ifdef _OPENMP
  const int workers = options.workers > 0 ? options.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (int k = 0; k < count; ++k) body(k);
#else
  for (int k = 0; k < count; ++k) body(k);
#endif
}

}  // namespace lossres
