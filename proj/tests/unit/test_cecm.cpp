#include <doctest.h>

#include <cecm/basis.hpp>
#include <cecm/cecm.hpp>
#include <cecm/gauss_legendre.hpp>
#include <cecm/registry.hpp>

#include <algorithm>

#include "test_helpers.hpp"

using namespace cecm;
using namespace cecm::testing;

namespace {

// Full 1D polynomial pipeline up to the DECM starting rule.
struct Pipeline1d {
  Mesh mesh;
  GaussField field;
  AnalyticIntegrand family;
  BasisModel model;
  std::unique_ptr<AnalyticEvaluator> eval;
  DiscreteRule drule;
  ContinuousRule start;

  explicit Pipeline1d(int degree, int elements = 200, int q = 4)
      : mesh(make_structured_mesh({{-1.0, 1.0}}, {elements},
                                  ElementKind::LineLinear, q)),
        field(gauss_field(mesh)),
        family(lagrange_family(1, degree)) {
    SnapshotMatrix snap;
    snap.data = std::make_shared<DenseBlockSource>(
        sample_integrand(family, field.points));
    snap.weights = field.weights;
    model = augment_constant(compute_basis(snap, 0.0));
    model.analytic = family;
    eval = std::make_unique<AnalyticEvaluator>(model, mesh);
    drule = decm(model.u, field.weights);
    start = rule_from_decm(drule, field);
  }
};

// Relative deviation between a computed rule and a reference Gauss rule,
// both sorted by position.
double gauss_deviation_1d(const Matrix& points, const Vector& weights,
                          const GaussRule1d& ref) {
  REQUIRE(points.rows() == ref.nodes.size());
  std::vector<Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Index(0));
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return points(a, 0) < points(b, 0); });
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    const Index j = order[static_cast<std::size_t>(i)];
    num += std::pow(points(j, 0) - ref.nodes(i), 2) +
           std::pow(weights(j) - ref.weights(i), 2);
    den += ref.nodes(i) * ref.nodes(i) + ref.weights(i) * ref.weights(i);
  }
  return std::sqrt(num / den);
}

// Two-function synthetic line basis with an adjustable admissible interval;
// the exact-integral vector is chosen freely by the test.
class SyntheticLineEvaluator final : public BasisEvaluator {
 public:
  SyntheticLineEvaluator(double x_min, double x_max)
      : x_min_(x_min), x_max_(x_max) {}

  std::optional<BasisEval> operator()(const Vector& x, std::optional<Index>,
                                      double) const override {
    if (x(0) < x_min_ || x(0) > x_max_) return std::nullopt;
    BasisEval ev;
    ev.element = 0;
    ev.u = RowVector(2);
    ev.u << std::sqrt(0.5), std::sqrt(1.5) * x(0);
    ev.grad = Matrix(1, 2);
    ev.grad << 0.0, std::sqrt(1.5);
    return ev;
  }
  Index size() const override { return 2; }

 private:
  double x_min_, x_max_;
};

}  // namespace

TEST_CASE("cecm_residual: DECM rule starts at a near-zero residual") {
  Pipeline1d pipe(5);
  const Vector r = cecm_residual(*pipe.eval, pipe.model.b, pipe.start.points,
                                 pipe.start.weights, &pipe.start.element_of);
  CHECK(r.norm() <= 1e-10 * pipe.model.b.norm());
}

TEST_CASE("cecm_residual: zero weights leave r = -b") {
  Pipeline1d pipe(3);
  const Vector r =
      cecm_residual(*pipe.eval, pipe.model.b, pipe.start.points,
                    Vector::Zero(pipe.start.weights.size()));
  CHECK((r + pipe.model.b).norm() == 0.0);
}

TEST_CASE("cecm_residual: perturbed rule matches the direct summation") {
  Pipeline1d pipe(4);
  Matrix pts = pipe.start.points;
  pts(2, 0) += 1e-3;
  const Vector r =
      cecm_residual(*pipe.eval, pipe.model.b, pts, pipe.start.weights);
  Vector direct = -pipe.model.b;
  for (Index i = 0; i < pts.rows(); ++i) {
    const auto ev = (*pipe.eval)(pts.row(i).transpose(), std::nullopt, 0.0);
    REQUIRE(ev.has_value());
    direct += pipe.start.weights(i) * ev->u.transpose();
  }
  CHECK((r - direct).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("cecm_jacobian: matches finite differences of the residual") {
  Pipeline1d pipe(4, 50);
  const std::vector<Index> actives = pipe.start.active();
  const std::vector<Index> l_idx(actives.begin(), actives.begin() + 3);
  const std::vector<Index> s_idx(actives.begin(), actives.begin() + 4);
  const Matrix jac = cecm_jacobian(*pipe.eval, pipe.start.points,
                                   pipe.start.weights, l_idx, s_idx);
  const double h = 1e-6;
  // Position blocks.
  for (std::size_t li = 0; li < l_idx.size(); ++li) {
    Matrix plus = pipe.start.points, minus = pipe.start.points;
    plus(l_idx[li], 0) += h;
    minus(l_idx[li], 0) -= h;
    const Vector fd = (cecm_residual(*pipe.eval, pipe.model.b, plus,
                                     pipe.start.weights) -
                       cecm_residual(*pipe.eval, pipe.model.b, minus,
                                     pipe.start.weights)) /
                      (2.0 * h);
    for (Index row = 0; row < jac.rows(); ++row) {
      const double scale = std::max(1.0, std::abs(fd(row)));
      CHECK(std::abs(jac(row, static_cast<Index>(li)) - fd(row)) <=
            1e-5 * scale);
    }
  }
  // Weight columns.
  const Index nx = static_cast<Index>(l_idx.size());
  for (std::size_t si = 0; si < s_idx.size(); ++si) {
    Vector plus = pipe.start.weights, minus = pipe.start.weights;
    plus(s_idx[si]) += h;
    minus(s_idx[si]) -= h;
    const Vector fd =
        (cecm_residual(*pipe.eval, pipe.model.b, pipe.start.points, plus) -
         cecm_residual(*pipe.eval, pipe.model.b, pipe.start.points, minus)) /
        (2.0 * h);
    for (Index row = 0; row < jac.rows(); ++row) {
      const double scale = std::max(1.0, std::abs(fd(row)));
      CHECK(std::abs(jac(row, nx + static_cast<Index>(si)) - fd(row)) <=
            1e-5 * scale);
    }
  }
}

TEST_CASE("cecm_jacobian: constant basis row and zero-weight columns vanish") {
  Pipeline1d pipe(3, 40);
  // Row of the constant basis function in J_X is zero (gradient of a
  // constant); with Lagrange snapshots the constant is a linear combination,
  // so check the exact structural property instead on zero weights.
  Vector w = pipe.start.weights;
  w(1) = 0.0;
  const std::vector<Index> l_idx = {1};
  const std::vector<Index> s_idx = {1};
  const Matrix jac =
      cecm_jacobian(*pipe.eval, pipe.start.points, w, l_idx, s_idx);
  CHECK(jac.col(0).cwiseAbs().maxCoeff() == 0.0);  // w_g = 0 kills J_X block
  CHECK(jac.col(1).cwiseAbs().maxCoeff() > 0.0);   // J_w column survives

  // An explicitly constant column has a zero gradient row everywhere.
  const SyntheticLineEvaluator synth(-1.0, 1.0);
  Matrix pts(1, 1);
  pts << 0.3;
  Vector ws(1);
  ws << 2.0;
  const Matrix j2 = cecm_jacobian(synth, pts, ws, {0}, {0});
  CHECK(j2(0, 0) == 0.0);  // d(const)/dx
}

TEST_CASE("newton_mod: converged input returns immediately") {
  Pipeline1d pipe(5);
  ContinuousRule rule = pipe.start;
  const Matrix before_points = rule.points;
  SolverParams params;
  const NewtonResult res =
      newton_mod(rule, rule.active().front(), *pipe.eval, pipe.model.b, params);
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK((rule.points - before_points).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solve_res: N = 1 zeroes the weight in a single shot") {
  Pipeline1d pipe(5);
  ContinuousRule rule = pipe.start;
  // Candidate with the smallest contribution, as the driver would pick.
  const std::vector<Index> actives = rule.active();
  Index weakest = actives.front();
  double smin = std::numeric_limits<double>::infinity();
  for (Index i : actives) {
    const auto ev = (*pipe.eval)(rule.points.row(i).transpose(),
                                 rule.element_of[static_cast<std::size_t>(i)],
                                 0.0);
    const double s = rule.weights(i) * ev->u.norm();
    if (s < smin) {
      smin = s;
      weakest = i;
    }
  }
  SolverParams params;
  const SolveResResult res =
      solve_res(rule, weakest, 1, *pipe.eval, pipe.model.b, params);
  CHECK(res.converged);
  CHECK(rule.weights(weakest) == 0.0);
  CHECK(rule.active_count() == pipe.start.active_count() - 1);
  const Vector r = cecm_residual(*pipe.eval, pipe.model.b, rule.points,
                                 rule.weights, &rule.element_of);
  CHECK(r.norm() <= params.eps_nr);
}

TEST_CASE("make_one_zero: degree-5 start eliminates on the first candidate") {
  Pipeline1d pipe(5);
  ContinuousRule rule = pipe.start;
  SolverParams params;
  const MakeZeroResult res =
      make_one_zero(rule, 1, *pipe.eval, pipe.model.b, params);
  CHECK(res.success);
  CHECK(res.record.candidate_trials == 1);
  CHECK(rule.active_count() == 5);
}

TEST_CASE("make_one_zero: an optimal two-point rule refuses to shrink") {
  Pipeline1d pipe(3);
  SolverParams params;
  ContinuousRule rule =
      sparsify_global(pipe.start, *pipe.eval, pipe.model.b, params);
  REQUIRE(rule.active_count() == 2);  // 2-point Gauss integrates cubics
  ContinuousRule attempt = rule;
  const MakeZeroResult res =
      make_one_zero(attempt, params.n_steps, *pipe.eval, pipe.model.b, params);
  CHECK_FALSE(res.success);
  CHECK(attempt.active_count() == 2);
  CHECK((attempt.weights - rule.weights).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sparsify_global: degree 5 lands on the 3-point Gauss rule") {
  Pipeline1d pipe(5);
  SolverParams params;
  const ContinuousRule rule =
      sparsify_global(pipe.start, *pipe.eval, pipe.model.b, params);
  REQUIRE(rule.active_count() == 3);

  const std::vector<Index> actives = rule.active();
  Matrix pts(3, 1);
  Vector ws(3);
  for (Index i = 0; i < 3; ++i) {
    pts(i, 0) = rule.points(actives[static_cast<std::size_t>(i)], 0);
    ws(i) = rule.weights(actives[static_cast<std::size_t>(i)]);
  }
  const double dev = gauss_deviation_1d(pts, ws, gauss_legendre(3));
  CHECK(dev <= 1e-10);

  // Reported counters follow the recorded sparsification path.
  CHECK(rule.eliminations.size() == 3);
  CHECK(rule.eliminations.front().candidate_trials >= 1);
}

TEST_CASE("sparsify: committed states conserve mass and stay inside") {
  Pipeline1d pipe(6);
  SolverParams params;
  const ContinuousRule rule =
      sparsify_global(pipe.start, *pipe.eval, pipe.model.b, params);
  CHECK(rule.active_count() == 4);  // even degree: (p+2)/2 points

  const double total = pipe.field.weights.sum();
  Index prev_active = -1;
  for (const RuleSnapshot& snap : rule.history) {
    double mass = 0.0;
    Index active = 0;
    for (Index i = 0; i < snap.weights.size(); ++i) {
      if (snap.weights(i) == 0.0) continue;
      ++active;
      mass += snap.weights(i);
      CHECK(std::abs(snap.points(i, 0)) <= 1.0 + 1e-10);
    }
    CHECK(mass == doctest::Approx(total).epsilon(1e-8));
    if (prev_active >= 0) CHECK(active == prev_active - 1);
    prev_active = active;
  }
}

TEST_CASE("sparsify_global: a constant-only basis keeps one point with the "
          "domain volume") {
  const Mesh mesh =
      make_structured_mesh({{-1.0, 1.0}}, {60}, ElementKind::LineLinear, 2);
  const GaussField field = gauss_field(mesh);
  SnapshotMatrix snap;
  snap.data = std::make_shared<DenseBlockSource>(
      Matrix(Matrix::Ones(field.size(), 1)));
  snap.weights = field.weights;
  BasisModel model = augment_constant(compute_basis(snap, 0.0));
  AnalyticIntegrand ones;
  ones.dim = 1;
  ones.components = 1;
  ones.value = [](const Vector&) { return RowVector(RowVector::Ones(1)); };
  ones.gradient = [](const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
  model.analytic = ones;
  const AnalyticEvaluator eval(model, mesh);

  const DiscreteRule drule = decm(model.u, field.weights);
  SolverParams params;
  const ContinuousRule rule = sparsify_global(
      rule_from_decm(drule, field), eval, model.b, params);
  REQUIRE(rule.active_count() == 1);
  CHECK(rule.weights(rule.active().front()) ==
        doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("newton_mod: escaping points are frozen and the step still "
          "converges") {
  // Admissible interval clipped to [-0.25, 1]: the Newton direction pushes
  // the left point across the fake boundary, which must freeze it while the
  // remaining unknowns absorb the correction.
  const SyntheticLineEvaluator eval(-0.25, 1.0);
  Vector b(2);
  b << std::sqrt(2.0), 0.0;  // mass 2, first moment 0

  ContinuousRule rule;
  rule.points = Matrix(3, 1);
  rule.points << 0.3, -0.2, 0.1;
  rule.weights = Vector(3);
  rule.weights << 1.0, 0.8, 0.2;
  rule.element_of = {0, 0, 0};

  SolverParams params;
  const SolveResResult res = solve_res(rule, 2, 1, eval, b, params);
  CHECK(res.converged);
  const Vector r = cecm_residual(eval, b, rule.points, rule.weights);
  CHECK(r.norm() <= params.eps_nr);
  for (Index i : rule.active()) {
    CHECK(rule.points(i, 0) >= -0.25 - 1e-12);
    CHECK(rule.points(i, 0) <= 1.0 + 1e-12);
  }
}

TEST_CASE("sparse correction: column-pivoted solve keeps at most rank-many "
          "nonzeros") {
  const Matrix g = random_matrix(3, 8, 701);
  const Vector c = random_matrix(3, 1, 702).col(0);
  const Vector dq = g.colPivHouseholderQr().solve(c);
  Index nonzeros = 0;
  for (Index i = 0; i < dq.size(); ++i)
    if (dq(i) != 0.0) ++nonzeros;
  CHECK(nonzeros <= 3);
  CHECK((g * dq - c).norm() <= 1e-10 * c.norm());
}

TEST_CASE("solve_res: an already-tiny weight is zeroed in a single step") {
  Pipeline1d pipe(5);
  SolverParams params;
  ContinuousRule rule =
      sparsify_global(pipe.start, *pipe.eval, pipe.model.b, params);
  REQUIRE(rule.active_count() == 3);

  // Append an extra point whose weight is below the perturbation bound
  // eps_nr * |b| / |u(x)|; zeroing it cannot push the residual over tol.
  const Index p = rule.weights.size();
  ContinuousRule padded = rule;
  padded.points.conservativeResize(p + 1, 1);
  padded.points(p, 0) = 0.5;
  padded.weights.conservativeResize(p + 1);
  const auto ev = (*pipe.eval)(padded.points.row(p).transpose(), 0, 100.0);
  REQUIRE(ev.has_value());
  padded.weights(p) = 0.5 * params.eps_nr * pipe.model.b.norm() / ev->u.norm();
  padded.element_of.push_back(ev->element);
  padded.gauss_origin.push_back(-1);

  const SolveResResult res =
      solve_res(padded, p, 1, *pipe.eval, pipe.model.b, params);
  CHECK(res.converged);
  CHECK(res.newton_iters == 0);  // converged at the first residual check
  CHECK(padded.weights(p) == 0.0);
}

TEST_CASE("cecm: provenance flags distinguish selected from relocated") {
  Pipeline1d pipe(5);
  // The discrete rule keeps its Gauss row indices.
  for (std::size_t i = 0; i < pipe.start.gauss_origin.size(); ++i) {
    const Index g = pipe.start.gauss_origin[i];
    REQUIRE(g >= 0);
    CHECK((pipe.field.points.row(g) - pipe.start.points.row(
                                          static_cast<Index>(i)))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  SolverParams params;
  const ContinuousRule rule =
      sparsify_global(pipe.start, *pipe.eval, pipe.model.b, params);
  // Every surviving point of the degree-5 run was relocated continuously.
  for (Index i : rule.active())
    CHECK(rule.gauss_origin[static_cast<std::size_t>(i)] == -1);
}

TEST_CASE("solve_res: failure restores the input rule exactly") {
  Pipeline1d pipe(3);
  SolverParams params;
  ContinuousRule optimal =
      sparsify_global(pipe.start, *pipe.eval, pipe.model.b, params);
  REQUIRE(optimal.active_count() == 2);
  ContinuousRule attempt = optimal;
  const SolveResResult res = solve_res(attempt, optimal.active().front(),
                                       params.n_steps, *pipe.eval,
                                       pipe.model.b, params);
  CHECK_FALSE(res.converged);
  CHECK((attempt.points - optimal.points).cwiseAbs().maxCoeff() == 0.0);
  CHECK((attempt.weights - optimal.weights).cwiseAbs().maxCoeff() == 0.0);
}
