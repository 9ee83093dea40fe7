#ifndef CECM_MESH_HPP
#define CECM_MESH_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cecm/types.hpp"

namespace cecm {

enum class ElementKind {
  LineLinear,
  LineQuadratic,
  QuadBilinear,
  QuadQuadratic,
  HexTrilinear,
};

int element_dim(ElementKind kind);
int element_node_count(ElementKind kind);
std::string element_kind_name(ElementKind kind);
ElementKind element_kind_from_name(const std::string& name);

/// Shape functions of the isoparametric element at parent coordinates xi.
Vector nodal_shape(ElementKind kind, const Vector& xi);
/// Parent-coordinate gradients, one row per direction (d x n_nodes).
Matrix nodal_shape_grad(ElementKind kind, const Vector& xi);

/// Finite element mesh: nodes, connectivity, per-element Gauss order, and
/// the element adjacency (elements sharing at least one node).
struct Mesh {
  int dim = 1;
  ElementKind kind = ElementKind::LineLinear;
  int gauss_per_dir = 2;
  Matrix nodes;                                 // n_nodes x dim
  std::vector<std::vector<Index>> elements;     // connectivity rows
  std::vector<std::vector<Index>> neighbors;    // symmetric adjacency
  Matrix centroids;                             // node mean per element
  Vector circumradii;                           // max node-centroid distance

  Index element_count() const {
    return static_cast<Index>(elements.size());
  }
  Index gauss_per_element() const {
    Index r = 1;
    for (int i = 0; i < dim; ++i) r *= gauss_per_dir;
    return r;
  }
  /// Node coordinates of element e, one row per node.
  Matrix element_nodes(Index e) const;
  /// Physical coordinates of parent point xi inside element e.
  Vector map_to_physical(Index e, const Vector& xi) const;
  /// Geometry Jacobian d x d (entry (i,j) = dx_j/dxi_i).
  Matrix jacobian(Index e, const Vector& xi) const;
  /// Inverse isoparametric map by Newton iteration; nullopt if it fails to
  /// converge or the Jacobian degenerates.
  std::optional<Vector> parent_coords(Index e, const Vector& x,
                                      int max_iter = 30,
                                      double tol = 1e-12) const;
  /// True if x lies in the closed parent domain of e within boundary_tol.
  bool element_contains(Index e, const Vector& x,
                        double boundary_tol = 1e-10) const;
};

/// Rebuilds adjacency and the centroid/circumradius caches; validates
/// connectivity. Call after assembling nodes and elements by hand.
void finalize_mesh(Mesh& mesh);

/// All physical Gauss points of the mesh with their weights and owners.
struct GaussField {
  Matrix points;   // M x dim
  Vector weights;  // M, strictly positive
  std::vector<Index> owner;                        // Gauss row -> element
  std::vector<std::pair<Index, Index>> per_element;  // element -> (begin, count)

  Index size() const { return points.rows(); }
};

/// Tensor-product Gauss abscissae mapped through the isoparametric
/// transformation; weight = parent weight times Jacobian determinant.
/// Throws GeometryError naming the element on a non-positive Jacobian.
GaussField gauss_field(const Mesh& mesh);

struct LocateOptions {
  std::optional<Index> hint;
  double radius = 0.0;
  bool global_fallback = false;
};

/// Element whose closed parent preimage contains x, or nullopt. Search
/// order: hint element, breadth-first over neighbors whose centroid lies
/// within radius + circumradius of x, then (if enabled or no hint is given)
/// a deterministic global scan. First hit wins.
std::optional<Index> locate(const Mesh& mesh, const Vector& x,
                            const LocateOptions& opts = {});

/// Mesh file IO (UTF-8 JSON with dim, element_kind, gauss_per_dir, nodes,
/// elements).
Mesh load_mesh_json(const std::filesystem::path& path);
void save_mesh_json(const std::filesystem::path& path, const Mesh& mesh);

/// Structured box mesh with divisions[i] elements along direction i.
Mesh make_structured_mesh(const std::vector<std::pair<double, double>>& box,
                          const std::vector<int>& divisions, ElementKind kind,
                          int gauss_per_dir);

}  // namespace cecm

#endif
