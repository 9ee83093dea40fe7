#ifndef CECM_PIPELINE_HPP
#define CECM_PIPELINE_HPP

#include <cstdint>
#include <optional>

#include "cecm/basis.hpp"
#include "cecm/cecm.hpp"
#include "cecm/decm.hpp"
#include "cecm/mesh.hpp"

namespace cecm {

enum class EvalBackend { Analytic, Interpolatory };

/// How the constant function enters the basis: through the basis-level
/// augmentation (default), or by appending a scaled all-ones column to the
/// snapshots before the SVD.
enum class ConstantRoute { Basis, Column };

/// End-to-end configuration of the rule pipeline: Gauss field, weighted SVD,
/// constant augmentation, discrete selection, continuous sparsification.
struct RuleConfig {
  double eps_svd = 1e-6;
  SvdMethod svd_method = SvdMethod::Auto;
  EvalBackend backend = EvalBackend::Analytic;
  ConstantRoute constant_route = ConstantRoute::Basis;
  SolverParams solver;
  std::uint64_t seed = 0;
  bool run_cecm = true;  // false stops after the discrete rule
  // Whole-mesh location fallback inside the Newton loop; off by default,
  // so a relocation beyond the searched patch counts as out-of-domain.
  bool global_search = false;
};

struct PipelineStats {
  Index gauss_points = 0;
  Index snapshot_columns = 0;
  Index basis_functions = 0;
  Index decm_points = 0;
  Index cecm_points = 0;
  double decm_residual = 0.0;
  double cecm_residual = 0.0;
  double full_error_decm = 0.0;  // |A^T W* - b_FE| / |b_FE|
  double full_error_cecm = 0.0;
  double sum_weights_fe = 0.0;
  double sum_weights_rule = 0.0;
  double seconds_svd = 0.0;
  double seconds_decm = 0.0;
  double seconds_cecm = 0.0;
};

struct RulePipelineResult {
  BasisModel model;
  DiscreteRule discrete;
  ContinuousRule rule;
  PipelineStats stats;
};

/// Runs the pipeline over prepared snapshots. The analytic integrand must be
/// present when the analytic backend is chosen; the interpolatory backend
/// only needs the snapshots themselves.
RulePipelineResult run_rule_pipeline(
    const Mesh& mesh, const GaussField& field, const SnapshotMatrix& snapshots,
    const std::optional<AnalyticIntegrand>& integrand, const RuleConfig& config);

/// Exact integrals of the full snapshot matrix, streamed block by block.
Vector full_integrals(const BlockSource& blocks, const Vector& weights);

}  // namespace cecm

#endif
