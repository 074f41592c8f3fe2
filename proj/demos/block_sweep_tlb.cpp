// Block sweeps over a FLASH-like unk array at three page sizes. Shows how
// few TLB misses remain once a whole block fits in one page.

#include <cstdio>

#include "pagescope/blockmesh.hpp"
#include "pagescope/tlbsim.hpp"

using namespace pagescope;

int main() {
  // 5 variables, 16^3 zones, 200 blocks: 160 KiB per block, ~31 MiB total.
  const auto layout = UnkLayout::cube(5, 16, 200);
  const auto trace = gen_trace(layout, Traversal{TraversalPattern::BlockSweep}, 20);

  std::printf("%zu accesses, block stride %llu bytes\n", trace.accesses.size(),
              static_cast<unsigned long long>(layout.block_stride_bytes()));
  for (const auto& row : page_size_sweep(trace.accesses, TlbConfig::illustrative(), {4 * kKiB, 2 * kMiB, 512 * kMiB})) {
    std::printf("%6s  misses %10llu  pages %8llu  ratio %.4f\n", format_size(row.page_size_bytes).c_str(),
                static_cast<unsigned long long>(row.stats.misses),
                static_cast<unsigned long long>(row.stats.distinct_pages), row.ratio);
  }
}
