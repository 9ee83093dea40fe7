#ifndef CECM_GAUSS_LEGENDRE_HPP
#define CECM_GAUSS_LEGENDRE_HPP

#include "cecm/types.hpp"

namespace cecm {

/// n-point Gauss-Legendre rule on [-1, 1].
struct GaussRule1d {
  Vector nodes;    // ascending; exactly antisymmetric about 0
  Vector weights;  // positive, symmetric
};

/// Nodes via Newton iteration on the Legendre polynomial, mirrored so that
/// node i and node n-1-i are exact negatives.
GaussRule1d gauss_legendre(int n);

}  // namespace cecm

#endif
