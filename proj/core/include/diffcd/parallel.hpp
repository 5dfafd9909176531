#pragma once

#include <cstddef>
#include <functional>

namespace diffcd::parallel {

/// Worker count used by every data-parallel loop in the library (default 1).
void set_num_threads(int n);
int num_threads();

/// Runs fn(block) for block in [0, num_blocks). Blocks are partitioned over
/// workers; callers write per-block outputs and reduce them in block order, so
/// results never depend on the thread count.
void for_blocks(std::size_t num_blocks, const std::function<void(std::size_t)>& fn);

/// Number of fixed-size blocks covering n items.
constexpr std::size_t block_count(std::size_t n, std::size_t block) {
    return (n + block - 1) / block;
}

}  // namespace diffcd::parallel
