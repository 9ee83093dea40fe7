#include <doctest.h>

#include <cecm/pipeline.hpp>
#include <cecm/registry.hpp>
#include <cecm/rule_io.hpp>

#include <filesystem>
#include <fstream>
#include <thread>

#include "test_helpers.hpp"

using namespace cecm;
using namespace cecm::testing;

namespace {

struct Setup {
  Mesh mesh;
  GaussField field;
  AnalyticIntegrand family;
  SnapshotMatrix snapshots;

  Setup(int dim, int degree, int elements, int q) {
    if (dim == 1)
      mesh = make_structured_mesh({{-1.0, 1.0}}, {elements},
                                  ElementKind::LineLinear, q);
    else
      mesh = make_structured_mesh({{-1.0, 1.0}, {-1.0, 1.0}},
                                  {elements, elements},
                                  ElementKind::QuadBilinear, q);
    field = gauss_field(mesh);
    family = lagrange_family(dim, degree);
    snapshots.data = std::make_shared<DenseBlockSource>(
        sample_integrand(family, field.points));
    snapshots.weights = field.weights;
  }
};

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("pipeline: interpolatory backend reaches the 2-point Gauss rule") {
  Setup setup(1, 3, 50, 4);  // cubic snapshots, interpolation exact at q=4
  RuleConfig config;
  config.eps_svd = 0.0;
  config.backend = EvalBackend::Interpolatory;
  const RulePipelineResult res = run_rule_pipeline(
      setup.mesh, setup.field, setup.snapshots, std::nullopt, config);
  REQUIRE(res.stats.cecm_points == 2);
  const std::vector<Index> actives = res.rule.active();
  const double g = 0.5773502691896258;
  for (Index i : actives) {
    CHECK(std::abs(std::abs(res.rule.points(i, 0)) - g) <= 1e-9);
    CHECK(res.rule.weights(i) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("pipeline: 2D interpolatory backend recovers the 2x2 Gauss rule") {
  // Bicubic snapshots with q=4 interpolants: the Gauss-point interpolation
  // is exact, so the relocating solver sees the same functions as the
  // analytic route and must land on the tensor rule.
  const Mesh mesh = make_structured_mesh({{-1.0, 1.0}, {-1.0, 1.0}}, {10, 10},
                                         ElementKind::QuadBilinear, 4);
  const GaussField field = gauss_field(mesh);
  const AnalyticIntegrand family = lagrange_family(2, 3);
  SnapshotMatrix snap;
  snap.data = std::make_shared<DenseBlockSource>(
      sample_integrand(family, field.points));
  snap.weights = field.weights;

  RuleConfig config;
  config.eps_svd = 0.0;
  config.backend = EvalBackend::Interpolatory;
  const RulePipelineResult res =
      run_rule_pipeline(mesh, field, snap, std::nullopt, config);
  REQUIRE(res.stats.cecm_points == 4);
  const double g = 0.5773502691896258;
  for (Index i : res.rule.active()) {
    CHECK(std::abs(std::abs(res.rule.points(i, 0)) - g) <= 1e-8);
    CHECK(std::abs(std::abs(res.rule.points(i, 1)) - g) <= 1e-8);
    CHECK(res.rule.weights(i) == doctest::Approx(1.0).epsilon(1e-8));
  }
  CHECK(res.stats.full_error_cecm <= 1e-9);
}

TEST_CASE("pipeline: constant column route spans constants through the SVD") {
  // A single odd snapshot column is orthogonal to the constants; the column
  // route lets the SVD absorb them instead of the basis-level augmentation.
  const Mesh mesh =
      make_structured_mesh({{-1.0, 1.0}}, {60}, ElementKind::LineLinear, 3);
  const GaussField field = gauss_field(mesh);
  Matrix a(field.size(), 1);
  for (Index g = 0; g < field.size(); ++g) a(g, 0) = field.points(g, 0);
  SnapshotMatrix snap;
  snap.data = std::make_shared<DenseBlockSource>(a);
  snap.weights = field.weights;

  AnalyticIntegrand ident;
  ident.dim = 1;
  ident.components = 1;
  ident.value = [](const Vector& x) {
    RowVector r(1);
    r << x(0);
    return r;
  };
  ident.gradient = [](const Vector&) {
    Matrix g(1, 1);
    g << 1.0;
    return g;
  };

  RuleConfig config;
  config.eps_svd = 0.0;
  config.constant_route = ConstantRoute::Column;
  const RulePipelineResult res =
      run_rule_pipeline(mesh, field, snap, ident, config);

  CHECK(res.stats.snapshot_columns == 2);  // appended constant column
  CHECK_FALSE(res.model.augmented);        // SVD already spans constants
  CHECK(res.model.has_constant);
  // {1, x} is integrated exactly by the single midpoint rule.
  REQUIRE(res.stats.cecm_points == 1);
  const Index pt = res.rule.active().front();
  CHECK(std::abs(res.rule.points(pt, 0)) <= 1e-10);
  CHECK(res.rule.weights(pt) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("pipeline: both augmentation routes reach the same rule size") {
  Setup setup(1, 4, 100, 4);
  RuleConfig basis_route;
  basis_route.eps_svd = 0.0;
  const RulePipelineResult a = run_rule_pipeline(
      setup.mesh, setup.field, setup.snapshots, setup.family, basis_route);
  RuleConfig column_route = basis_route;
  column_route.constant_route = ConstantRoute::Column;
  const RulePipelineResult b = run_rule_pipeline(
      setup.mesh, setup.field, setup.snapshots, setup.family, column_route);
  CHECK(a.stats.cecm_points == b.stats.cecm_points);
  CHECK(a.stats.full_error_cecm <= 1e-10);
  CHECK(b.stats.full_error_cecm <= 1e-10);
}

TEST_CASE("pipeline: the recovered rule is independent of mesh distortion") {
  // Jittering the interior nodes changes every element and Gauss point but
  // not the domain or the integrand space, so the synthesized rule must
  // still be the 2x2 Gauss rule. The per-element order stays high enough
  // to keep the reference integrals exact on the distorted geometry.
  Mesh mesh = make_structured_mesh({{-1.0, 1.0}, {-1.0, 1.0}}, {10, 10},
                                   ElementKind::QuadBilinear, 4);
  GaussianSampler rng(515);
  const double h = 0.2;
  for (Index i = 0; i < mesh.nodes.rows(); ++i) {
    if (mesh.nodes.row(i).cwiseAbs().maxCoeff() > 1.0 - 1e-9) continue;
    for (int k = 0; k < 2; ++k)
      mesh.nodes(i, k) += 0.15 * h * (2.0 * rng.uniform() - 1.0);
  }
  finalize_mesh(mesh);
  const GaussField field = gauss_field(mesh);
  REQUIRE(field.weights.sum() == doctest::Approx(4.0).epsilon(1e-12));

  const AnalyticIntegrand family = lagrange_family(2, 3);
  SnapshotMatrix snap;
  snap.data = std::make_shared<DenseBlockSource>(
      sample_integrand(family, field.points));
  snap.weights = field.weights;
  RuleConfig config;
  config.eps_svd = 0.0;
  const RulePipelineResult res =
      run_rule_pipeline(mesh, field, snap, family, config);

  REQUIRE(res.stats.cecm_points == 4);
  const double g = 0.5773502691896258;
  for (Index i : res.rule.active()) {
    CHECK(std::abs(std::abs(res.rule.points(i, 0)) - g) <= 1e-9);
    CHECK(std::abs(std::abs(res.rule.points(i, 1)) - g) <= 1e-9);
    CHECK(res.rule.weights(i) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("pipeline: identical seeds give byte-identical rule files") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cecm_pipeline_tests";
  fs::create_directories(dir);

  Setup setup(2, 3, 10, 2);
  RuleConfig config;
  config.eps_svd = 0.0;
  config.svd_method = SvdMethod::Randomized;
  config.seed = 424242;

  for (int run = 0; run < 2; ++run) {
    const RulePipelineResult res = run_rule_pipeline(
        setup.mesh, setup.field, setup.snapshots, setup.family, config);
    save_rule_json(dir / ("run" + std::to_string(run) + ".json"),
                   to_rule_file(res.rule, setup.mesh.dim));
  }
  CHECK(file_bytes(dir / "run0.json") == file_bytes(dir / "run1.json"));
}

TEST_CASE("interpolant cache: concurrent demand builds are idempotent") {
  const Mesh mesh = make_structured_mesh({{-1.0, 1.0}, {-1.0, 1.0}}, {8, 8},
                                         ElementKind::QuadBilinear, 2);
  const GaussField field = gauss_field(mesh);
  InterpolantCache cache(mesh, field);

  std::vector<std::thread> workers;
  std::atomic<int> failures{0};
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&, t]() {
      GaussianSampler rng(900 + static_cast<std::uint64_t>(t));
      for (int i = 0; i < 200; ++i) {
        const Index e = static_cast<Index>(
            rng.raw() % static_cast<std::uint64_t>(mesh.element_count()));
        const ElementInterpolant& itp = cache.get(e);
        if (itp.element != e) ++failures;
      }
    });
  }
  for (auto& w : workers) w.join();
  CHECK(failures.load() == 0);
  CHECK(cache.size() <= static_cast<std::size_t>(mesh.element_count()));

  // Every cached interpolant still satisfies the interpolation property.
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const ElementInterpolant& itp = cache.get(e);
    const auto [begin, count] = field.per_element[static_cast<std::size_t>(e)];
    const RowVector n = shape_at(itp, field.points.row(begin).transpose());
    CHECK(n(0) == doctest::Approx(1.0).epsilon(1e-10));
  }
}
