#ifndef CECM_INTERPOLANT_HPP
#define CECM_INTERPOLANT_HPP

#include <memory>
#include <shared_mutex>
#include <unordered_map>

#include "cecm/mesh.hpp"
#include "cecm/types.hpp"

namespace cecm {

/// Local polynomial interpolant through the Gauss points of one element.
/// Shape function g takes value 1 at Gauss point g and 0 at the others;
/// the monomial basis spans degrees 0..q-1 per direction in the scaled
/// coordinates x' = (x - centroid) / L.
struct ElementInterpolant {
  Index element = 0;
  Vector centroid;            // d
  Vector scale;               // d, per-direction scaling length L_i
  Matrix inv_moment;          // r x r, inverse of the moment matrix
  Eigen::MatrixXi exponents;  // r x d monomial exponents
  double condition = 0.0;     // condition number of the moment matrix
};

/// Throws NumericalError naming the element when the moment matrix has
/// condition number above 1e12 (overly distorted element).
ElementInterpolant build_interpolant(const Mesh& mesh, Index e,
                                     const GaussField& field);

/// Interpolatory shape functions at x (1 x r).
RowVector shape_at(const ElementInterpolant& itp, const Vector& x);

/// Spatial gradients of the shape functions, one row per direction (d x r).
Matrix shape_grad_at(const ElementInterpolant& itp, const Vector& x);

/// Demand-built per-element interpolants, shared across evaluation calls.
/// Concurrent reads are safe; duplicate builds of the same element are
/// idempotent (first insertion wins).
class InterpolantCache {
 public:
  InterpolantCache(const Mesh& mesh, const GaussField& field)
      : mesh_(mesh), field_(field) {}

  const ElementInterpolant& get(Index e) const;
  std::size_t size() const;

 private:
  const Mesh& mesh_;
  const GaussField& field_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<Index, std::unique_ptr<ElementInterpolant>> map_;
};

}  // namespace cecm

#endif
