#ifndef CECM_DECM_HPP
#define CECM_DECM_HPP

#include <vector>

#include "cecm/types.hpp"

namespace cecm {

/// Interpolatory discrete rule: as many Gauss points as basis functions,
/// selected greedily, with positive weights solving U(z,:)^T w = b exactly.
struct DiscreteRule {
  std::vector<Index> indices;            // z, in selection order
  Vector weights;                        // w*, all positive on exit
  std::vector<double> residual_history;  // |b - U(z,:)^T w| per iteration
};

/// Greedy point selection for a W-orthogonal basis whose range contains the
/// constants. Each iteration picks the unselected row most positively
/// parallel to the residual (ties resolved toward the later Gauss index,
/// matching the reference selection), re-solves the least-squares weights,
/// and stops once there are as many points as basis functions.
DiscreteRule decm(const Matrix& u, const Vector& w_fe);

}  // namespace cecm

#endif
