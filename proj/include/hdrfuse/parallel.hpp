#pragma once

namespace hdr {

/// Pins OpenMP to one thread. Kernels partition work so that results do not
/// depend on the thread count, but sequential execution is the documented
/// reproducibility mode.
void set_deterministic(bool on);
int max_threads();

}  // namespace hdr
