#include <doctest.h>

#include <cecm/gauss_legendre.hpp>
#include <cecm/interpolant.hpp>
#include <cecm/mesh.hpp>

#include <filesystem>

#include "test_helpers.hpp"

using namespace cecm;
using namespace cecm::testing;

namespace {

Mesh unit_line(int elements, int q) {
  return make_structured_mesh({{-1.0, 1.0}}, {elements},
                              ElementKind::LineLinear, q);
}

std::vector<Mesh> one_mesh_per_kind() {
  std::vector<Mesh> meshes;
  meshes.push_back(make_structured_mesh({{-1.0, 1.0}}, {7},
                                        ElementKind::LineLinear, 2));
  meshes.push_back(make_structured_mesh({{-1.0, 1.0}}, {5},
                                        ElementKind::LineQuadratic, 3));
  meshes.push_back(make_structured_mesh({{-1.0, 1.0}, {0.0, 2.0}}, {4, 3},
                                        ElementKind::QuadBilinear, 2));
  meshes.push_back(make_structured_mesh({{-1.0, 1.0}, {0.0, 2.0}}, {3, 2},
                                        ElementKind::QuadQuadratic, 3));
  meshes.push_back(make_structured_mesh({{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}},
                                        {2, 2, 2}, ElementKind::HexTrilinear,
                                        2));
  return meshes;
}

// Random strictly interior physical point of a random element.
Vector random_interior_point(const Mesh& mesh, GaussianSampler& rng,
                             Index* element = nullptr) {
  const Index e =
      static_cast<Index>(rng.raw() % static_cast<std::uint64_t>(
                                         mesh.element_count()));
  Vector xi(mesh.dim);
  for (int i = 0; i < mesh.dim; ++i) xi(i) = 1.8 * rng.uniform() - 0.9;
  if (element) *element = e;
  return mesh.map_to_physical(e, xi);
}

}  // namespace

TEST_CASE("gauss_legendre: textbook 2- and 3-point rules") {
  const GaussRule1d g2 = gauss_legendre(2);
  CHECK(g2.nodes(1) == doctest::Approx(0.5773502691896258).epsilon(1e-14));
  CHECK(g2.nodes(0) == -g2.nodes(1));
  CHECK(g2.weights(0) == doctest::Approx(1.0));
  const GaussRule1d g3 = gauss_legendre(3);
  CHECK(g3.nodes(2) == doctest::Approx(0.7745966692414834).epsilon(1e-14));
  CHECK(g3.nodes(1) == 0.0);
  CHECK(g3.weights(1) == doctest::Approx(8.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("gauss_field: single linear element on [-1,1] with q=2") {
  const Mesh mesh = unit_line(1, 2);
  const GaussField field = gauss_field(mesh);
  REQUIRE(field.size() == 2);
  CHECK(field.points(0, 0) ==
        doctest::Approx(-0.5773502691896258).epsilon(1e-14));
  CHECK(field.points(1, 0) ==
        doctest::Approx(0.5773502691896258).epsilon(1e-14));
  CHECK(field.weights(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(field.weights(1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("gauss_field: 20x20 bilinear quads tile the biunit square") {
  const Mesh mesh = make_structured_mesh({{-1.0, 1.0}, {-1.0, 1.0}}, {20, 20},
                                         ElementKind::QuadBilinear, 2);
  const GaussField field = gauss_field(mesh);
  CHECK(field.size() == 20 * 20 * 4);
  CHECK(field.weights.sum() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK((field.weights.array() > 0.0).all());
}

TEST_CASE("gauss_field: distorted quad area matches the shoelace formula") {
  Mesh mesh;
  mesh.dim = 2;
  mesh.kind = ElementKind::QuadBilinear;
  mesh.gauss_per_dir = 2;
  mesh.nodes = Matrix(4, 2);
  mesh.nodes << 0.0, 0.0, 2.0, 0.2, 1.8, 1.5, -0.1, 1.1;
  mesh.elements = {{0, 1, 2, 3}};
  finalize_mesh(mesh);
  const GaussField field = gauss_field(mesh);

  double shoelace = 0.0;
  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    shoelace += mesh.nodes(i, 0) * mesh.nodes(j, 1) -
                mesh.nodes(j, 0) * mesh.nodes(i, 1);
  }
  shoelace = std::abs(shoelace) / 2.0;
  CHECK(field.weights.sum() == doctest::Approx(shoelace).epsilon(1e-13));
}

TEST_CASE("gauss_field: inverted element raises a geometry error") {
  Mesh mesh;
  mesh.dim = 2;
  mesh.kind = ElementKind::QuadBilinear;
  mesh.gauss_per_dir = 2;
  mesh.nodes = Matrix(4, 2);
  mesh.nodes << 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0;  // clockwise
  mesh.elements = {{0, 1, 2, 3}};
  finalize_mesh(mesh);
  CHECK_THROWS_AS(gauss_field(mesh), GeometryError);
}

TEST_CASE("gauss_field: weights stay positive under 10% node jitter") {
  GaussianSampler rng(401);
  for (Mesh mesh : one_mesh_per_kind()) {
    // Jitter proportional to the smallest element circumradius.
    const double h = mesh.circumradii.minCoeff();
    for (Index i = 0; i < mesh.nodes.rows(); ++i)
      for (int k = 0; k < mesh.dim; ++k)
        mesh.nodes(i, k) += 0.1 * h * (2.0 * rng.uniform() - 1.0);
    finalize_mesh(mesh);
    const GaussField field = gauss_field(mesh);
    CHECK((field.weights.array() > 0.0).all());
  }
}

TEST_CASE("locate: centroid of a hinted element is found immediately") {
  const Mesh mesh = make_structured_mesh({{-1.0, 1.0}, {-1.0, 1.0}}, {5, 5},
                                         ElementKind::QuadBilinear, 2);
  const Vector x = mesh.centroids.row(7).transpose();
  LocateOptions opts;
  opts.hint = 7;
  CHECK(locate(mesh, x, opts) == 7);
}

TEST_CASE("locate: points outside the domain return nothing") {
  const Mesh mesh = unit_line(10, 2);
  LocateOptions opts;
  opts.hint = 9;
  opts.radius = 100.0;
  opts.global_fallback = true;
  Vector x(1);
  x << 1.0 + 1e-6;
  CHECK_FALSE(locate(mesh, x, opts).has_value());
  x << -25.0;
  CHECK_FALSE(locate(mesh, x, opts).has_value());
}

TEST_CASE("locate: shared-boundary ownership follows the search order") {
  const Mesh mesh = make_structured_mesh({{0.0, 5.0}, {0.0, 1.0}}, {5, 1},
                                         ElementKind::QuadBilinear, 2);
  // Elements 3 and 4 share the edge x = 4.
  Vector x(2);
  x << 4.0, 0.5;
  LocateOptions opts;
  opts.hint = 3;
  opts.radius = 1.0;
  CHECK(locate(mesh, x, opts) == 3);
  opts.hint = 4;
  CHECK(locate(mesh, x, opts) == 4);
}

TEST_CASE("locate: BFS reaches elements beyond the immediate neighbors") {
  const Mesh mesh = unit_line(20, 2);
  const Vector x = mesh.centroids.row(15).transpose();
  LocateOptions opts;
  opts.hint = 12;
  opts.radius = 1.0;
  CHECK(locate(mesh, x, opts) == 15);
  // Too small a radius and no fallback: not found.
  opts.radius = 1e-3;
  CHECK_FALSE(locate(mesh, x, opts).has_value());
  opts.global_fallback = true;
  CHECK(locate(mesh, x, opts) == 15);
}

TEST_CASE("locate: stability under sub-1e-12 perturbations") {
  const Mesh mesh = make_structured_mesh({{-1.0, 1.0}, {-1.0, 1.0}}, {6, 6},
                                         ElementKind::QuadBilinear, 2);
  GaussianSampler rng(411);
  for (int trial = 0; trial < 50; ++trial) {
    Index e = 0;
    const Vector x = random_interior_point(mesh, rng, &e);
    LocateOptions opts;
    opts.global_fallback = true;
    const auto base = locate(mesh, x, opts);
    REQUIRE(base.has_value());
    for (int k = 0; k < mesh.dim; ++k) {
      Vector xp = x;
      xp(k) += 9e-13 * (rng.uniform() - 0.5);
      CHECK(locate(mesh, xp, opts) == base);
    }
  }
}

TEST_CASE("neighbors: symmetric adjacency") {
  const Mesh mesh = make_structured_mesh({{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}},
                                         {3, 3, 3}, ElementKind::HexTrilinear,
                                         2);
  for (Index e = 0; e < mesh.element_count(); ++e)
    for (Index nb : mesh.neighbors[static_cast<std::size_t>(e)]) {
      const auto& back = mesh.neighbors[static_cast<std::size_t>(nb)];
      CHECK(std::find(back.begin(), back.end(), e) != back.end());
    }
}

TEST_CASE("interpolant: 1D two-point element reproduces the hand inversion") {
  const Mesh mesh = unit_line(1, 2);
  const GaussField field = gauss_field(mesh);
  const ElementInterpolant itp = build_interpolant(mesh, 0, field);
  // Scaled Gauss coordinates sit at -1 and +1, so the shape functions are
  // (1 -  x')/2 and (1 + x')/2.
  for (double xp : {-0.7, 0.0, 0.3, 0.9}) {
    Vector x(1);
    x << xp * itp.scale(0);  // physical = scaled * L (centroid is 0)
    const RowVector n = shape_at(itp, x);
    CHECK(n(0) == doctest::Approx(0.5 * (1.0 - xp)).epsilon(1e-12));
    CHECK(n(1) == doctest::Approx(0.5 * (1.0 + xp)).epsilon(1e-12));
  }
}

TEST_CASE("interpolant: unit rows at the element's own Gauss points") {
  for (const Mesh& mesh : one_mesh_per_kind()) {
    const GaussField field = gauss_field(mesh);
    const Index e = mesh.element_count() / 2;
    const ElementInterpolant itp = build_interpolant(mesh, e, field);
    const auto [begin, count] = field.per_element[static_cast<std::size_t>(e)];
    for (Index g = 0; g < count; ++g) {
      const RowVector n = shape_at(itp, field.points.row(begin + g).transpose());
      for (Index j = 0; j < count; ++j)
        CHECK(n(j) == doctest::Approx(g == j ? 1.0 : 0.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("interpolant: quadratic reproduction on a rectangle with q=3") {
  const Mesh mesh = make_structured_mesh({{0.0, 2.0}, {0.0, 1.0}}, {1, 1},
                                         ElementKind::QuadBilinear, 3);
  const GaussField field = gauss_field(mesh);
  const ElementInterpolant itp = build_interpolant(mesh, 0, field);
  const auto f = [](double x, double y) {
    return 3.0 + 2.0 * x - y + x * x - 0.5 * x * y + 2.0 * y * y;
  };
  Vector values(field.size());
  for (Index g = 0; g < field.size(); ++g)
    values(g) = f(field.points(g, 0), field.points(g, 1));

  GaussianSampler rng(421);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(2);
    x << 2.0 * rng.uniform(), rng.uniform();
    const double interp = shape_at(itp, x).dot(values);
    CHECK(interp == doctest::Approx(f(x(0), x(1))).epsilon(1e-11));
  }
}

TEST_CASE("interpolant: partition of unity and gradient nullity") {
  GaussianSampler rng(431);
  for (const Mesh& mesh : one_mesh_per_kind()) {
    const GaussField field = gauss_field(mesh);
    InterpolantCache cache(mesh, field);
    for (int trial = 0; trial < 100; ++trial) {
      Index e = 0;
      const Vector x = random_interior_point(mesh, rng, &e);
      const ElementInterpolant& itp = cache.get(e);
      CHECK(shape_at(itp, x).sum() == doctest::Approx(1.0).epsilon(1e-10));
      const Matrix g = shape_grad_at(itp, x);
      for (Index i = 0; i < g.rows(); ++i)
        CHECK(std::abs(g.row(i).sum()) <= 1e-9);
    }
  }
}

TEST_CASE("interpolant: linear reproduction and exact constant gradients") {
  const Mesh mesh = make_structured_mesh({{-1.0, 1.0}, {-1.0, 1.0}}, {3, 3},
                                         ElementKind::QuadBilinear, 2);
  const GaussField field = gauss_field(mesh);
  const ElementInterpolant itp = build_interpolant(mesh, 4, field);
  const auto [begin, count] = field.per_element[4];
  Vector values(count);
  for (Index g = 0; g < count; ++g)
    values(g) = 2.0 * field.points(begin + g, 0) - field.points(begin + g, 1);

  GaussianSampler rng(441);
  for (int trial = 0; trial < 10; ++trial) {
    Vector xi(2);
    xi << 1.6 * rng.uniform() - 0.8, 1.6 * rng.uniform() - 0.8;
    const Vector x = mesh.map_to_physical(4, xi);
    CHECK(shape_at(itp, x).dot(values) ==
          doctest::Approx(2.0 * x(0) - x(1)).epsilon(1e-11));
    const Matrix g = shape_grad_at(itp, x);
    CHECK((g * values)(0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK((g * values)(1) == doctest::Approx(-1.0).epsilon(1e-10));
  }
}

TEST_CASE("interpolant: gradients agree with central finite differences") {
  const Mesh mesh = make_structured_mesh({{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}},
                                         {2, 2, 2}, ElementKind::HexTrilinear,
                                         2);
  const GaussField field = gauss_field(mesh);
  const ElementInterpolant itp = build_interpolant(mesh, 3, field);
  GaussianSampler rng(451);
  const double h = 1e-6;
  for (int trial = 0; trial < 5; ++trial) {
    Vector xi(3);
    for (int i = 0; i < 3; ++i) xi(i) = 1.2 * rng.uniform() - 0.6;
    const Vector x = mesh.map_to_physical(3, xi);
    const Matrix g = shape_grad_at(itp, x);
    for (int i = 0; i < 3; ++i) {
      Vector xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const RowVector fd = (shape_at(itp, xp) - shape_at(itp, xm)) / (2.0 * h);
      for (Index j = 0; j < g.cols(); ++j)
        CHECK(g(i, j) == doctest::Approx(fd(j)).epsilon(1e-6));
    }
  }
}

TEST_CASE("interpolant cache: builds once per element") {
  const Mesh mesh = unit_line(4, 2);
  const GaussField field = gauss_field(mesh);
  InterpolantCache cache(mesh, field);
  const ElementInterpolant& a = cache.get(2);
  const ElementInterpolant& b = cache.get(2);
  CHECK(&a == &b);
  CHECK(cache.size() == 1);
}

TEST_CASE("mesh json round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cecm_mesh_tests";
  fs::create_directories(dir);
  const Mesh mesh = make_structured_mesh({{-1.0, 1.0}, {0.0, 3.0}}, {2, 3},
                                         ElementKind::QuadQuadratic, 3);
  save_mesh_json(dir / "mesh.json", mesh);
  const Mesh back = load_mesh_json(dir / "mesh.json");
  CHECK(back.dim == mesh.dim);
  CHECK(back.kind == mesh.kind);
  CHECK(back.gauss_per_dir == 3);
  CHECK((back.nodes - mesh.nodes).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.elements == mesh.elements);
}

TEST_CASE("mesh validation rejects out-of-range connectivity") {
  Mesh mesh;
  mesh.dim = 1;
  mesh.kind = ElementKind::LineLinear;
  mesh.gauss_per_dir = 2;
  mesh.nodes = Matrix(2, 1);
  mesh.nodes << 0.0, 1.0;
  mesh.elements = {{0, 5}};
  CHECK_THROWS_AS(finalize_mesh(mesh), InputError);
}
