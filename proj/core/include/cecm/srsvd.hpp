#ifndef CECM_SRSVD_HPP
#define CECM_SRSVD_HPP

#include <cstdint>
#include <vector>

#include "cecm/block_source.hpp"
#include "cecm/svd.hpp"
#include "cecm/types.hpp"

namespace cecm {

/// Per-block record of the sequential orthogonalization.
struct BlockStats {
  Index added_cols = 0;   // columns contributed to Q by this block
  int rorth_iters = 0;    // range-finder passes spent on the block
};

/// Exact factorization A = Q*L of a column-partitioned matrix, built one
/// block at a time from orthogonal complements.
struct QlFactors {
  Matrix q;  // n x r, orthonormal
  Matrix l;  // r x m, block upper-triangular
  std::vector<BlockStats> stats;
};

/// Sequential randomized orthogonalization. Processes blocks strictly in
/// order; only the current block plus the accumulated Q and L live in memory.
/// Each block contributes the orthogonal complement of its columns with
/// respect to the basis gathered so far, computed by rsvd_inc at tolerance 0
/// using the previous block's contribution as rank estimate.
QlFactors srorth(const BlockSource& blocks, std::uint64_t rng_seed = 0);

/// Result of srsvd with the orthogonalization diagnostics attached.
struct SrsvdResult {
  SvdFactors factors;
  std::vector<BlockStats> stats;
};

/// Truncated SVD of the concatenated matrix at relative tolerance eps,
/// computed as srorth followed by a dense truncated SVD of L and the
/// left-factor lift U <- Q*U~.
SrsvdResult srsvd(const BlockSource& blocks, double eps,
                  std::uint64_t rng_seed = 0);

}  // namespace cecm

#endif
