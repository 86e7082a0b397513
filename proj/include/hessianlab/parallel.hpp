#pragma once

namespace hessianlab {

/// Worker count for pointwise maps. Reads HESSIANLAB_THREADS on first use;
/// defaults to the number of available cores.
int thread_count();
void set_thread_count(int threads);

}  // namespace hessianlab
