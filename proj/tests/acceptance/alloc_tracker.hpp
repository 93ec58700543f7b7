#pragma once

// Peak live heap bytes allocated inside a window. malloc and friends are
// interposed (Eigen allocates through malloc, not operator new); only blocks
// allocated inside the window count, so frees of older blocks cannot hide
// new allocations. Single-threaded use only.

#include <cstddef>

namespace alloc_tracker {

void begin();
// Peak bytes since begin(); stops tracking.
std::size_t end();

}  // namespace alloc_tracker
