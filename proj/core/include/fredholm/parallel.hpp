#pragma once

#include <functional>

namespace fredholm {

/// Worker-thread budget for parallel loops. Reads FREDHOLM_THREADS once
/// (values below 1 are clamped to 1); defaults to the hardware concurrency.
int thread_budget();

/// Runs body(i) for every i in [begin, end). Iterations must be independent;
/// outputs are identical for any thread budget.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace fredholm
