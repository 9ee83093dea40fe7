#include <benchmark/benchmark.h>

#include <cecm/basis.hpp>
#include <cecm/cecm.hpp>
#include <cecm/decm.hpp>
#include <cecm/pipeline.hpp>
#include <cecm/random.hpp>
#include <cecm/registry.hpp>

using namespace cecm;

namespace {

struct PolyFixture {
  Mesh mesh;
  GaussField field;
  AnalyticIntegrand family;
  SnapshotMatrix snapshots;
  BasisModel model;

  PolyFixture(int dim, int degree) {
    if (dim == 1)
      mesh = make_structured_mesh({{-1.0, 1.0}}, {200},
                                  ElementKind::LineLinear, 4);
    else
      mesh = make_structured_mesh({{-1.0, 1.0}, {-1.0, 1.0}}, {20, 20},
                                  ElementKind::QuadBilinear, 2);
    field = gauss_field(mesh);
    family = lagrange_family(dim, degree);
    snapshots.data = std::make_shared<DenseBlockSource>(
        sample_integrand(family, field.points));
    snapshots.weights = field.weights;
    model = augment_constant(compute_basis(snapshots, 0.0));
    model.analytic = family;
  }
};

void BM_DecmSelection(benchmark::State& state) {
  const PolyFixture fixture(2, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(decm(fixture.model.u, fixture.field.weights));
  }
}
BENCHMARK(BM_DecmSelection)->Arg(3)->Arg(5)->Arg(7);

void BM_Locate(benchmark::State& state) {
  const PolyFixture fixture(2, 3);
  GaussianSampler rng(23);
  LocateOptions opts;
  opts.hint = 210;
  opts.radius = 0.5;
  for (auto _ : state) {
    Vector x(2);
    x << 2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0;
    benchmark::DoNotOptimize(locate(fixture.mesh, x, opts));
  }
}
BENCHMARK(BM_Locate);

void BM_EvalInterp(benchmark::State& state) {
  const PolyFixture fixture(2, 3);
  const InterpEvaluator eval(fixture.model, fixture.mesh, fixture.field);
  GaussianSampler rng(29);
  for (auto _ : state) {
    Vector x(2);
    x << 2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0;
    benchmark::DoNotOptimize(eval(x, std::nullopt, 0.0));
  }
}
BENCHMARK(BM_EvalInterp);

void BM_EvalAnalytic(benchmark::State& state) {
  const PolyFixture fixture(2, 3);
  const AnalyticEvaluator eval(fixture.model, fixture.mesh);
  GaussianSampler rng(31);
  for (auto _ : state) {
    Vector x(2);
    x << 2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0;
    benchmark::DoNotOptimize(eval(x, std::nullopt, 0.0));
  }
}
BENCHMARK(BM_EvalAnalytic);

void BM_FullPipeline1d(benchmark::State& state) {
  const PolyFixture fixture(1, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    RuleConfig config;
    config.eps_svd = 0.0;
    benchmark::DoNotOptimize(run_rule_pipeline(
        fixture.mesh, fixture.field, fixture.snapshots, fixture.family,
        config));
  }
}
BENCHMARK(BM_FullPipeline1d)->Arg(5)->Arg(9);

}  // namespace

BENCHMARK_MAIN();
