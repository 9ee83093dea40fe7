#include "cecm/pipeline.hpp"

#include <chrono>

namespace cecm {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Quadrature of every snapshot column by a sparse rule over Gauss rows.
Vector rule_integrals_on_rows(const BlockSource& blocks,
                              const std::vector<Index>& rows,
                              const Vector& weights) {
  Vector out(blocks.total_cols());
  Index col = 0;
  for (int i = 0; i < blocks.block_count(); ++i) {
    const Matrix block = blocks.load(i);
    Vector segment = Vector::Zero(block.cols());
    for (std::size_t k = 0; k < rows.size(); ++k)
      segment += weights(static_cast<Index>(k)) *
                 block.row(rows[k]).transpose();
    out.segment(col, block.cols()) = segment;
    col += block.cols();
  }
  return out;
}

}  // namespace

Vector full_integrals(const BlockSource& blocks, const Vector& weights) {
  Vector out(blocks.total_cols());
  Index col = 0;
  for (int i = 0; i < blocks.block_count(); ++i) {
    const Matrix block = blocks.load(i);
    out.segment(col, block.cols()) = block.transpose() * weights;
    col += block.cols();
  }
  return out;
}

RulePipelineResult run_rule_pipeline(
    const Mesh& mesh, const GaussField& field, const SnapshotMatrix& snapshots,
    const std::optional<AnalyticIntegrand>& integrand,
    const RuleConfig& config) {
  if (config.backend == EvalBackend::Analytic && !integrand)
    throw InputError(
        "rule pipeline: analytic backend requires an analytic integrand");
  if (snapshots.rows() != field.size())
    throw InputError("rule pipeline: snapshot rows != Gauss point count");

  RulePipelineResult result;
  PipelineStats& stats = result.stats;
  stats.gauss_points = field.size();
  stats.sum_weights_fe = snapshots.weights.sum();

  SnapshotMatrix working = snapshots;
  std::optional<AnalyticIntegrand> working_integrand = integrand;
  if (config.constant_route == ConstantRoute::Column) {
    const double c = default_constant_column_value(snapshots);
    working = append_constant_column(snapshots, c);
    if (integrand) {
      // The integrand gains the constant component matching the column.
      AnalyticIntegrand wrapped;
      wrapped.dim = integrand->dim;
      wrapped.components = integrand->components + 1;
      const AnalyticIntegrand inner = *integrand;
      wrapped.value = [inner, c](const Vector& x) {
        RowVector row(inner.components + 1);
        row.head(inner.components) = inner.value(x);
        row(inner.components) = c;
        return row;
      };
      wrapped.gradient = [inner](const Vector& x) {
        Matrix g = Matrix::Zero(inner.dim, inner.components + 1);
        g.leftCols(inner.components) = inner.gradient(x);
        return g;
      };
      working_integrand = wrapped;
    }
  }
  stats.snapshot_columns = working.cols();

  auto t0 = std::chrono::steady_clock::now();
  result.model = augment_constant(
      compute_basis(working, config.eps_svd, config.svd_method, config.seed));
  if (working_integrand) result.model.analytic = *working_integrand;
  stats.seconds_svd = seconds_since(t0);
  stats.basis_functions = result.model.size();

  t0 = std::chrono::steady_clock::now();
  result.discrete = decm(result.model.u, snapshots.weights);
  stats.seconds_decm = seconds_since(t0);
  stats.decm_points = static_cast<Index>(result.discrete.indices.size());
  stats.decm_residual = result.discrete.residual_history.empty()
                            ? 0.0
                            : result.discrete.residual_history.back();

  const Vector b_fe = full_integrals(*snapshots.data, snapshots.weights);
  const double b_fe_norm = b_fe.norm();
  {
    const Vector decm_quad = rule_integrals_on_rows(
        *snapshots.data, result.discrete.indices, result.discrete.weights);
    stats.full_error_decm =
        (b_fe_norm > 0.0) ? (decm_quad - b_fe).norm() / b_fe_norm : 0.0;
  }

  result.rule = rule_from_decm(result.discrete, field);
  stats.sum_weights_rule = result.rule.weights.sum();
  stats.cecm_points = stats.decm_points;
  stats.cecm_residual = stats.decm_residual;
  stats.full_error_cecm = stats.full_error_decm;
  if (!config.run_cecm) return result;

  std::shared_ptr<InterpolantCache> cache;
  std::unique_ptr<BasisEvaluator> eval;
  if (config.backend == EvalBackend::Analytic) {
    auto analytic = std::make_unique<AnalyticEvaluator>(result.model, mesh);
    analytic->set_global_fallback(config.global_search);
    eval = std::move(analytic);
  } else {
    cache = std::make_shared<InterpolantCache>(mesh, field);
    auto interp =
        std::make_unique<InterpEvaluator>(result.model, mesh, field, cache);
    interp->set_global_fallback(config.global_search);
    eval = std::move(interp);
  }

  t0 = std::chrono::steady_clock::now();
  result.rule =
      sparsify_global(result.rule, *eval, result.model.b, config.solver);
  stats.seconds_cecm = seconds_since(t0);
  stats.cecm_points = result.rule.active_count();
  stats.cecm_residual = result.rule.residual_norm;

  const std::vector<Index> actives = result.rule.active();
  stats.sum_weights_rule = 0.0;
  for (Index i : actives) stats.sum_weights_rule += result.rule.weights(i);

  // Full-matrix quadrature error of the relocated rule: exact through the
  // analytic integrand when available, otherwise through the basis
  // reconstruction A(x) ~ u_svd(x) S V^T.
  Vector cecm_quad = Vector::Zero(snapshots.cols());
  if (integrand) {
    for (Index i : actives)
      cecm_quad += result.rule.weights(i) *
                   integrand->value(result.rule.points.row(i).transpose())
                       .transpose();
  } else {
    const Index off = result.model.augmented ? 1 : 0;
    Vector u_quad = Vector::Zero(result.model.size());
    for (Index i : actives) {
      const auto ev = (*eval)(result.rule.points.row(i).transpose(),
                              result.rule.element_of[static_cast<std::size_t>(
                                  i)],
                              0.0);
      if (!ev)
        throw GeometryError("rule pipeline: active point escaped the domain");
      u_quad += result.rule.weights(i) * ev->u.transpose();
    }
    // Reconstruction restricted to the original snapshot columns (the
    // auxiliary constant column, if appended, is not part of the report).
    cecm_quad = result.model.v.topRows(snapshots.cols()) *
                result.model.singular.asDiagonal() *
                u_quad.segment(off, result.model.svd_size());
  }
  stats.full_error_cecm =
      (b_fe_norm > 0.0) ? (cecm_quad - b_fe).norm() / b_fe_norm : 0.0;
  return result;
}

}  // namespace cecm
