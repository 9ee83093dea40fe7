#ifndef CECM_CECM_HPP
#define CECM_CECM_HPP

#include <optional>
#include <vector>

#include "cecm/basis.hpp"
#include "cecm/decm.hpp"
#include "cecm/mesh.hpp"
#include "cecm/types.hpp"

namespace cecm {

/// Controls for the constrained Newton solver and the staged driver.
struct SolverParams {
  int k_max = 40;            // Newton iteration budget per call
  double eps_nr = 1e-8;      // residual convergence tolerance
  int n_neg = 5;             // max transient negative weights
  int n_steps = 20;          // stage-2 weight reduction steps
  double eps_svd_jac = 1e-10;  // relative truncation of the Jacobian SVD

  void validate() const {
    if (k_max < 1 || eps_nr <= 0.0 || n_neg < 1 || n_steps < 1 ||
        eps_svd_jac <= 0.0)
      throw InputError("SolverParams: all parameters must be positive");
  }
};

/// Trial and iteration counters of one successful weight elimination.
struct EliminationRecord {
  int candidate_trials = 0;  // t: solve_res attempts before success
  int newton_iters = 0;      // k: Newton iterations of the winning attempt
};

/// Snapshot of a committed rule state along the sparsification path.
struct RuleSnapshot {
  Matrix points;
  Vector weights;
  std::vector<Index> element_of;
  std::vector<Index> gauss_origin;
  double residual_norm = 0.0;
};

/// Cubature rule under sparsification. Zero weights mark eliminated points
/// (their last coordinates are kept for diagnostics); the active set is
/// authoritative.
struct ContinuousRule {
  Matrix points;                   // p x d
  Vector weights;                  // p, zeros = eliminated
  std::vector<Index> element_of;   // owner element per point
  // Provenance: the Gauss row a point was selected as, or -1 once the
  // solver has relocated it continuously.
  std::vector<Index> gauss_origin;
  double residual_norm = 0.0;
  std::vector<EliminationRecord> eliminations;
  std::vector<RuleSnapshot> history;  // committed rules, sparsest last

  std::vector<Index> active() const {
    std::vector<Index> idx;
    for (Index i = 0; i < weights.size(); ++i)
      if (weights(i) != 0.0) idx.push_back(i);
    return idx;
  }
  Index active_count() const {
    return static_cast<Index>(active().size());
  }
};

/// Starting rule from the DECM selection over a Gauss field.
ContinuousRule rule_from_decm(const DiscreteRule& discrete,
                              const GaussField& field);

/// Integration residual r = u^T(X) w - b over the nonzero-weight points.
/// Throws GeometryError if an active point has left the domain.
Vector cecm_residual(const BasisEvaluator& eval, const Vector& b,
                     const Matrix& points, const Vector& weights,
                     const std::vector<Index>* element_hints = nullptr);

/// Jacobian block matrix [J_X restricted to l_idx | J_w restricted to s_idx]:
/// position columns are w_g * grad u(x_g)^T per point, weight columns are
/// u(x_g)^T. Dimensions p x (d*|l_idx| + |s_idx|).
Matrix cecm_jacobian(const BasisEvaluator& eval, const Matrix& points,
                     const Vector& weights, const std::vector<Index>& l_idx,
                     const std::vector<Index>& s_idx);

/// Outcome of one constrained Newton solve.
struct NewtonResult {
  bool converged = false;
  int iterations = 0;             // iterations charged against k_max
  std::vector<Index> frozen;      // points whose position was pinned
  double residual_norm = 0.0;
};

/// Modified Newton iteration for u^T(X) w = b with w[r_idx] held fixed.
/// Unknowns are the positions and weights of the other active points.
/// Points that step outside the domain are returned to their previous
/// position and their indices move to the fixed-position set for the rest
/// of the call; steps breeding n_neg or more negative weights abort.
/// On failure the rule is left at the last committed feasible state.
NewtonResult newton_mod(ContinuousRule& rule, Index r_idx,
                        const BasisEvaluator& eval, const Vector& b,
                        const SolverParams& params);

/// Progressive weight reduction: w[r_idx] walks w_ref*(1 - n/N) for
/// n = 1..N with a Newton solve at each step. On any failure the input rule
/// is restored.
struct SolveResResult {
  bool converged = false;
  int newton_iters = 0;
};
SolveResResult solve_res(ContinuousRule& rule, Index r_idx, int n_reduction,
                         const BasisEvaluator& eval, const Vector& b,
                         const SolverParams& params);

/// Tries candidates in ascending order of their residual contribution
/// s_i = w_i |u(x_i)| until one weight is driven to zero.
struct MakeZeroResult {
  bool success = false;
  EliminationRecord record;
};
MakeZeroResult make_one_zero(ContinuousRule& rule, int n_reduction,
                             const BasisEvaluator& eval, const Vector& b,
                             const SolverParams& params);

/// Repeats make_one_zero until it fails; returns the sparsest rule whose
/// active weights are all positive.
ContinuousRule sparsify(ContinuousRule rule, int n_reduction,
                        const BasisEvaluator& eval, const Vector& b,
                        const SolverParams& params);

/// Two-stage driver: a single-step pass over all candidates, then a second
/// pass with n_steps-step weight reduction.
ContinuousRule sparsify_global(ContinuousRule rule,
                               const BasisEvaluator& eval, const Vector& b,
                               const SolverParams& params);

}  // namespace cecm

#endif
