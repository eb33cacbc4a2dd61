#include "hdrfuse/parallel.hpp"

#include <omp.h>

namespace hdr {
namespace {
int g_default_threads = 0;
}

void set_deterministic(bool on) {
  if (g_default_threads == 0) g_default_threads = omp_get_max_threads();
  omp_set_num_threads(on ? 1 : g_default_threads);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace hdr
