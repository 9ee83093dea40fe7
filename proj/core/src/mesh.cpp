#include "cecm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "cecm/gauss_legendre.hpp"

namespace cecm {

namespace {

// 1D Lagrange shape values at nodes {-1, +1}.
inline void line2(double t, double* n, double* dn) {
  n[0] = 0.5 * (1.0 - t);
  n[1] = 0.5 * (1.0 + t);
  dn[0] = -0.5;
  dn[1] = 0.5;
}

// 1D quadratic Lagrange at nodes {-1, +1, 0} (vertices first, then midside).
inline void line3(double t, double* n, double* dn) {
  n[0] = 0.5 * t * (t - 1.0);
  n[1] = 0.5 * t * (t + 1.0);
  n[2] = 1.0 - t * t;
  dn[0] = t - 0.5;
  dn[1] = t + 0.5;
  dn[2] = -2.0 * t;
}

// Node numbering: corners counter-clockwise, then midsides, then center.
constexpr int kQuad9Ix[9] = {0, 1, 1, 0, 2, 1, 2, 0, 2};
constexpr int kQuad9Iy[9] = {0, 0, 1, 1, 0, 2, 1, 2, 2};

constexpr double kHexSign[8][3] = {
    {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
    {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1},
};

}  // namespace

int element_dim(ElementKind kind) {
  switch (kind) {
    case ElementKind::LineLinear:
    case ElementKind::LineQuadratic:
      return 1;
    case ElementKind::QuadBilinear:
    case ElementKind::QuadQuadratic:
      return 2;
    case ElementKind::HexTrilinear:
      return 3;
  }
  throw InputError("unknown element kind");
}

int element_node_count(ElementKind kind) {
  switch (kind) {
    case ElementKind::LineLinear:
      return 2;
    case ElementKind::LineQuadratic:
      return 3;
    case ElementKind::QuadBilinear:
      return 4;
    case ElementKind::QuadQuadratic:
      return 9;
    case ElementKind::HexTrilinear:
      return 8;
  }
  throw InputError("unknown element kind");
}

std::string element_kind_name(ElementKind kind) {
  switch (kind) {
    case ElementKind::LineLinear:
      return "line-linear";
    case ElementKind::LineQuadratic:
      return "line-quadratic";
    case ElementKind::QuadBilinear:
      return "quad-bilinear";
    case ElementKind::QuadQuadratic:
      return "quad-quadratic";
    case ElementKind::HexTrilinear:
      return "hex-trilinear";
  }
  throw InputError("unknown element kind");
}

ElementKind element_kind_from_name(const std::string& name) {
  if (name == "line-linear") return ElementKind::LineLinear;
  if (name == "line-quadratic") return ElementKind::LineQuadratic;
  if (name == "quad-bilinear") return ElementKind::QuadBilinear;
  if (name == "quad-quadratic") return ElementKind::QuadQuadratic;
  if (name == "hex-trilinear") return ElementKind::HexTrilinear;
  throw InputError("unknown element kind \"" + name + "\"");
}

Vector nodal_shape(ElementKind kind, const Vector& xi) {
  const int nn = element_node_count(kind);
  Vector n(nn);
  double a[3], da[3], b[3], db[3];
  switch (kind) {
    case ElementKind::LineLinear:
      line2(xi(0), a, da);
      n << a[0], a[1];
      break;
    case ElementKind::LineQuadratic:
      line3(xi(0), a, da);
      n << a[0], a[1], a[2];
      break;
    case ElementKind::QuadBilinear:
      line2(xi(0), a, da);
      line2(xi(1), b, db);
      n << a[0] * b[0], a[1] * b[0], a[1] * b[1], a[0] * b[1];
      break;
    case ElementKind::QuadQuadratic:
      line3(xi(0), a, da);
      line3(xi(1), b, db);
      for (int i = 0; i < 9; ++i) n(i) = a[kQuad9Ix[i]] * b[kQuad9Iy[i]];
      break;
    case ElementKind::HexTrilinear:
      for (int i = 0; i < 8; ++i)
        n(i) = 0.125 * (1.0 + kHexSign[i][0] * xi(0)) *
               (1.0 + kHexSign[i][1] * xi(1)) * (1.0 + kHexSign[i][2] * xi(2));
      break;
  }
  return n;
}

Matrix nodal_shape_grad(ElementKind kind, const Vector& xi) {
  const int nn = element_node_count(kind);
  const int d = element_dim(kind);
  Matrix g(d, nn);
  double a[3], da[3], b[3], db[3];
  switch (kind) {
    case ElementKind::LineLinear:
      line2(xi(0), a, da);
      g << da[0], da[1];
      break;
    case ElementKind::LineQuadratic:
      line3(xi(0), a, da);
      g << da[0], da[1], da[2];
      break;
    case ElementKind::QuadBilinear:
      line2(xi(0), a, da);
      line2(xi(1), b, db);
      g.row(0) << da[0] * b[0], da[1] * b[0], da[1] * b[1], da[0] * b[1];
      g.row(1) << a[0] * db[0], a[1] * db[0], a[1] * db[1], a[0] * db[1];
      break;
    case ElementKind::QuadQuadratic:
      line3(xi(0), a, da);
      line3(xi(1), b, db);
      for (int i = 0; i < 9; ++i) {
        g(0, i) = da[kQuad9Ix[i]] * b[kQuad9Iy[i]];
        g(1, i) = a[kQuad9Ix[i]] * db[kQuad9Iy[i]];
      }
      break;
    case ElementKind::HexTrilinear:
      for (int i = 0; i < 8; ++i) {
        const double fx = 1.0 + kHexSign[i][0] * xi(0);
        const double fy = 1.0 + kHexSign[i][1] * xi(1);
        const double fz = 1.0 + kHexSign[i][2] * xi(2);
        g(0, i) = 0.125 * kHexSign[i][0] * fy * fz;
        g(1, i) = 0.125 * fx * kHexSign[i][1] * fz;
        g(2, i) = 0.125 * fx * fy * kHexSign[i][2];
      }
      break;
  }
  return g;
}

Matrix Mesh::element_nodes(Index e) const {
  const auto& conn = elements.at(static_cast<std::size_t>(e));
  Matrix x(static_cast<Index>(conn.size()), dim);
  for (std::size_t a = 0; a < conn.size(); ++a)
    x.row(static_cast<Index>(a)) = nodes.row(conn[a]);
  return x;
}

Vector Mesh::map_to_physical(Index e, const Vector& xi) const {
  return element_nodes(e).transpose() * nodal_shape(kind, xi);
}

Matrix Mesh::jacobian(Index e, const Vector& xi) const {
  return nodal_shape_grad(kind, xi) * element_nodes(e);
}

std::optional<Vector> Mesh::parent_coords(Index e, const Vector& x,
                                          int max_iter, double tol) const {
  Vector xi = Vector::Zero(dim);
  const Matrix xe = element_nodes(e);
  for (int it = 0; it < max_iter; ++it) {
    const Vector res = x - xe.transpose() * nodal_shape(kind, xi);
    if (res.norm() <= tol) return xi;
    const Matrix jac = nodal_shape_grad(kind, xi) * xe;
    Eigen::PartialPivLU<Matrix> lu(jac.transpose());
    const Vector dxi = lu.solve(res);
    if (!dxi.allFinite()) return std::nullopt;
    xi += dxi;
    if (xi.cwiseAbs().maxCoeff() > 10.0) return std::nullopt;  // diverging
  }
  const Vector res = x - xe.transpose() * nodal_shape(kind, xi);
  if (res.norm() <= tol) return xi;
  return std::nullopt;
}

bool Mesh::element_contains(Index e, const Vector& x,
                            double boundary_tol) const {
  const auto xi = parent_coords(e, x);
  if (!xi) return false;
  return xi->cwiseAbs().maxCoeff() <= 1.0 + boundary_tol;
}

void finalize_mesh(Mesh& mesh) {
  const int expected_dim = element_dim(mesh.kind);
  if (mesh.dim != expected_dim)
    throw InputError("mesh dim " + std::to_string(mesh.dim) +
                     " incompatible with element kind " +
                     element_kind_name(mesh.kind));
  if (mesh.gauss_per_dir < 1)
    throw InputError("gauss_per_dir must be at least 1");
  const Index n_nodes = mesh.nodes.rows();
  const int nn = element_node_count(mesh.kind);
  const Index n_el = mesh.element_count();

  std::vector<std::vector<Index>> node_elements(
      static_cast<std::size_t>(n_nodes));
  for (Index e = 0; e < n_el; ++e) {
    const auto& conn = mesh.elements[static_cast<std::size_t>(e)];
    if (static_cast<int>(conn.size()) != nn)
      throw InputError("element " + std::to_string(e) + " has " +
                       std::to_string(conn.size()) + " nodes, expected " +
                       std::to_string(nn));
    for (Index node : conn) {
      if (node < 0 || node >= n_nodes)
        throw InputError("element " + std::to_string(e) +
                         " references node " + std::to_string(node) +
                         " out of range");
      node_elements[static_cast<std::size_t>(node)].push_back(e);
    }
  }

  mesh.neighbors.assign(static_cast<std::size_t>(n_el), {});
  for (Index e = 0; e < n_el; ++e) {
    std::set<Index> adj;
    for (Index node : mesh.elements[static_cast<std::size_t>(e)])
      for (Index other : node_elements[static_cast<std::size_t>(node)])
        if (other != e) adj.insert(other);
    mesh.neighbors[static_cast<std::size_t>(e)].assign(adj.begin(), adj.end());
  }

  mesh.centroids = Matrix(n_el, mesh.dim);
  mesh.circumradii = Vector(n_el);
  for (Index e = 0; e < n_el; ++e) {
    const Matrix xe = mesh.element_nodes(e);
    const RowVector c = xe.colwise().mean();
    mesh.centroids.row(e) = c;
    double r = 0.0;
    for (Index a = 0; a < xe.rows(); ++a)
      r = std::max(r, (xe.row(a) - c).norm());
    mesh.circumradii(e) = r;
  }
}

GaussField gauss_field(const Mesh& mesh) {
  const int d = mesh.dim;
  const int q = mesh.gauss_per_dir;
  const GaussRule1d rule = gauss_legendre(q);
  const Index r = mesh.gauss_per_element();
  const Index n_el = mesh.element_count();

  GaussField field;
  field.points = Matrix(n_el * r, d);
  field.weights = Vector(n_el * r);
  field.owner.resize(static_cast<std::size_t>(n_el * r));
  field.per_element.resize(static_cast<std::size_t>(n_el));

  // Parent tensor grid, first direction fastest.
  Matrix parent(r, d);
  Vector parent_w(r);
  for (Index g = 0; g < r; ++g) {
    Index rest = g;
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      const Index idx = rest % q;
      rest /= q;
      parent(g, i) = rule.nodes(idx);
      w *= rule.weights(idx);
    }
    parent_w(g) = w;
  }

  Index row = 0;
  for (Index e = 0; e < n_el; ++e) {
    field.per_element[static_cast<std::size_t>(e)] = {row, r};
    const Matrix xe = mesh.element_nodes(e);
    for (Index g = 0; g < r; ++g, ++row) {
      const Vector xi = parent.row(g).transpose();
      field.points.row(row) =
          (xe.transpose() * nodal_shape(mesh.kind, xi)).transpose();
      const Matrix jac = nodal_shape_grad(mesh.kind, xi) * xe;
      const double detj = jac.determinant();
      if (!(detj > 0.0))
        throw GeometryError("element " + std::to_string(e) +
                            ": non-positive Jacobian " + std::to_string(detj) +
                            " at Gauss point " + std::to_string(g));
      field.weights(row) = parent_w(g) * detj;
      field.owner[static_cast<std::size_t>(row)] = e;
    }
  }
  return field;
}

std::optional<Index> locate(const Mesh& mesh, const Vector& x,
                            const LocateOptions& opts) {
  constexpr double kBoundaryTol = 1e-10;
  if (opts.hint) {
    const Index h = *opts.hint;
    if (h < 0 || h >= mesh.element_count())
      throw InputError("locate: hint element " + std::to_string(h) +
                       " out of range");
    if (mesh.element_contains(h, x, kBoundaryTol)) return h;

    // Breadth-first over the adjacency, pruned by centroid distance.
    std::vector<char> seen(static_cast<std::size_t>(mesh.element_count()), 0);
    std::deque<Index> queue;
    seen[static_cast<std::size_t>(h)] = 1;
    queue.push_back(h);
    while (!queue.empty()) {
      const Index e = queue.front();
      queue.pop_front();
      for (Index nb : mesh.neighbors[static_cast<std::size_t>(e)]) {
        if (seen[static_cast<std::size_t>(nb)]) continue;
        seen[static_cast<std::size_t>(nb)] = 1;
        const double dist = (mesh.centroids.row(nb).transpose() - x).norm();
        if (dist > opts.radius + mesh.circumradii(nb)) continue;
        if (mesh.element_contains(nb, x, kBoundaryTol)) return nb;
        queue.push_back(nb);
      }
    }
  }
  if (opts.global_fallback || !opts.hint) {
    for (Index e = 0; e < mesh.element_count(); ++e) {
      const double dist = (mesh.centroids.row(e).transpose() - x).norm();
      if (dist > mesh.circumradii(e) * (1.0 + 1e-9) + 1e-14) continue;
      if (mesh.element_contains(e, x, kBoundaryTol)) return e;
    }
  }
  return std::nullopt;
}

Mesh load_mesh_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
  Mesh mesh;
  try {
    mesh.dim = j.at("dim").get<int>();
    mesh.kind = element_kind_from_name(j.at("element_kind").get<std::string>());
    mesh.gauss_per_dir = j.at("gauss_per_dir").get<int>();
    const auto& jn = j.at("nodes");
    mesh.nodes = Matrix(static_cast<Index>(jn.size()), mesh.dim);
    for (Index i = 0; i < mesh.nodes.rows(); ++i) {
      const auto& row = jn.at(static_cast<std::size_t>(i));
      if (static_cast<int>(row.size()) != mesh.dim)
        throw InputError(path.string() + ": node " + std::to_string(i) +
                         " has wrong arity");
      for (int k = 0; k < mesh.dim; ++k)
        mesh.nodes(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    for (const auto& el : j.at("elements")) {
      std::vector<Index> conn;
      for (const auto& v : el) conn.push_back(v.get<Index>());
      mesh.elements.push_back(std::move(conn));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  finalize_mesh(mesh);
  return mesh;
}

void save_mesh_json(const std::filesystem::path& path, const Mesh& mesh) {
  nlohmann::json j;
  j["dim"] = mesh.dim;
  j["element_kind"] = element_kind_name(mesh.kind);
  j["gauss_per_dir"] = mesh.gauss_per_dir;
  auto jn = nlohmann::json::array();
  for (Index i = 0; i < mesh.nodes.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (int k = 0; k < mesh.dim; ++k) row.push_back(mesh.nodes(i, k));
    jn.push_back(std::move(row));
  }
  j["nodes"] = std::move(jn);
  auto je = nlohmann::json::array();
  for (const auto& conn : mesh.elements) {
    auto row = nlohmann::json::array();
    for (Index v : conn) row.push_back(v);
    je.push_back(std::move(row));
  }
  j["elements"] = std::move(je);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << "\n";
}

Mesh make_structured_mesh(const std::vector<std::pair<double, double>>& box,
                          const std::vector<int>& divisions, ElementKind kind,
                          int gauss_per_dir) {
  const int d = element_dim(kind);
  if (static_cast<int>(box.size()) != d ||
      static_cast<int>(divisions.size()) != d)
    throw InputError("structured mesh: box/divisions arity must match the "
                     "element dimension");
  for (int i = 0; i < d; ++i) {
    if (divisions[i] < 1)
      throw InputError("structured mesh: divisions must be positive");
    if (!(box[i].second > box[i].first))
      throw InputError("structured mesh: box bounds must be increasing");
  }

  // Node grid resolution: quadratic kinds carry midside nodes.
  const bool quadratic =
      kind == ElementKind::LineQuadratic || kind == ElementKind::QuadQuadratic;
  const int per_el = quadratic ? 2 : 1;

  std::vector<Index> npts(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i)
    npts[static_cast<std::size_t>(i)] =
        static_cast<Index>(divisions[static_cast<std::size_t>(i)]) * per_el +
        1;

  Mesh mesh;
  mesh.dim = d;
  mesh.kind = kind;
  mesh.gauss_per_dir = gauss_per_dir;

  Index total_nodes = 1;
  for (int i = 0; i < d; ++i) total_nodes *= npts[static_cast<std::size_t>(i)];
  mesh.nodes = Matrix(total_nodes, d);
  const auto node_id = [&](const std::array<Index, 3>& idx) {
    Index id = 0;
    for (int i = d - 1; i >= 0; --i)
      id = id * npts[static_cast<std::size_t>(i)] +
           idx[static_cast<std::size_t>(i)];
    return id;
  };
  {
    std::array<Index, 3> idx{0, 0, 0};
    for (Index flat = 0; flat < total_nodes; ++flat) {
      Index rest = flat;
      for (int i = 0; i < d; ++i) {
        idx[static_cast<std::size_t>(i)] =
            rest % npts[static_cast<std::size_t>(i)];
        rest /= npts[static_cast<std::size_t>(i)];
      }
      for (int i = 0; i < d; ++i) {
        const auto [lo, hi] = box[static_cast<std::size_t>(i)];
        const Index steps = npts[static_cast<std::size_t>(i)] - 1;
        mesh.nodes(node_id(idx), i) =
            lo + (hi - lo) * static_cast<double>(
                                 idx[static_cast<std::size_t>(i)]) /
                     static_cast<double>(steps);
      }
    }
  }

  std::array<Index, 3> ne{1, 1, 1};
  for (int i = 0; i < d; ++i)
    ne[static_cast<std::size_t>(i)] = divisions[static_cast<std::size_t>(i)];
  for (Index ez = 0; ez < ne[2]; ++ez) {
    for (Index ey = 0; ey < ne[1]; ++ey) {
      for (Index ex = 0; ex < ne[0]; ++ex) {
        const Index ox = ex * per_el, oy = ey * per_el, oz = ez * per_el;
        std::vector<Index> conn;
        switch (kind) {
          case ElementKind::LineLinear:
            conn = {node_id({ox, 0, 0}), node_id({ox + 1, 0, 0})};
            break;
          case ElementKind::LineQuadratic:
            conn = {node_id({ox, 0, 0}), node_id({ox + 2, 0, 0}),
                    node_id({ox + 1, 0, 0})};
            break;
          case ElementKind::QuadBilinear:
            conn = {node_id({ox, oy, 0}), node_id({ox + 1, oy, 0}),
                    node_id({ox + 1, oy + 1, 0}), node_id({ox, oy + 1, 0})};
            break;
          case ElementKind::QuadQuadratic:
            conn = {node_id({ox, oy, 0}),     node_id({ox + 2, oy, 0}),
                    node_id({ox + 2, oy + 2, 0}), node_id({ox, oy + 2, 0}),
                    node_id({ox + 1, oy, 0}), node_id({ox + 2, oy + 1, 0}),
                    node_id({ox + 1, oy + 2, 0}), node_id({ox, oy + 1, 0}),
                    node_id({ox + 1, oy + 1, 0})};
            break;
          case ElementKind::HexTrilinear:
            conn = {node_id({ox, oy, oz}),
                    node_id({ox + 1, oy, oz}),
                    node_id({ox + 1, oy + 1, oz}),
                    node_id({ox, oy + 1, oz}),
                    node_id({ox, oy, oz + 1}),
                    node_id({ox + 1, oy, oz + 1}),
                    node_id({ox + 1, oy + 1, oz + 1}),
                    node_id({ox, oy + 1, oz + 1})};
            break;
        }
        mesh.elements.push_back(std::move(conn));
      }
    }
  }

  finalize_mesh(mesh);
  return mesh;
}

}  // namespace cecm
