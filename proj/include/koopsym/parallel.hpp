#pragma once

#include <functional>

namespace koopsym {

/// Upper bound on worker threads used inside library calls (default 1).
void set_max_threads(int n);
int max_threads();

/// Runs body(i) for i in [0, count), split into contiguous chunks over at most
/// max_threads() threads. Each index must write only to its own outputs.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace koopsym
