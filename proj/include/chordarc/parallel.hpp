#pragma once

#include <cstddef>
#include <functional>

namespace chordarc {

// Worker count used by parallel_for. 0 selects hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(begin, end) over a static partition of [0, n). Chunk boundaries
// depend only on n and the thread count, and every body writes to its own
// output slots, so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace chordarc
