#pragma once

namespace visco2d {

/// Worker-count hint shared by the CLI (--threads / VISCO2D_THREADS) and the
/// data-parallel diagnostics. Purely a hint; results are bit-identical at any
/// value.
int thread_hint();
void set_thread_hint(int threads);

}  // namespace visco2d
