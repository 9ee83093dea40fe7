#ifndef CECM_BASIS_HPP
#define CECM_BASIS_HPP

#include <functional>
#include <memory>
#include <optional>

#include "cecm/block_source.hpp"
#include "cecm/interpolant.hpp"
#include "cecm/mesh.hpp"
#include "cecm/srsvd.hpp"
#include "cecm/types.hpp"

namespace cecm {

/// Integrand sample matrix A_FE over the Gauss field (one column per scalar
/// function instance) together with the FE weight vector.
struct SnapshotMatrix {
  std::shared_ptr<const BlockSource> data;  // M x nP, possibly partitioned
  Vector weights;                           // W_FE, strictly positive

  Index rows() const { return data->rows(); }
  Index cols() const { return data->total_cols(); }
};

/// Analytic integrand callbacks: A(x) as a 1 x nP row and its spatial
/// derivatives stacked as d rows.
struct AnalyticIntegrand {
  int dim = 1;
  Index components = 0;
  std::function<RowVector(const Vector&)> value;
  std::function<Matrix(const Vector&)> gradient;
};

/// Weighted matrix diag(sqrt(W)) * A, densely or per block.
Matrix weighted_snapshots(const Matrix& a, const Vector& weights);
std::shared_ptr<const BlockSource> weighted_snapshots(
    std::shared_ptr<const BlockSource> a, const Vector& weights);

enum class SvdMethod {
  Auto,        // dense for a single block, sequential otherwise
  Dense,       // svd_truncated of the assembled matrix
  Randomized,  // rsvd_inc of the assembled matrix
  Sequential,  // srsvd over the blocks
};

/// W-orthogonal basis of the integrand with its exact integrals.
struct BasisModel {
  Matrix u;         // M x p discrete basis values at the Gauss points
  Vector singular;  // retained singular values (SVD columns only)
  Matrix v;         // right singular vectors, nP x k
  Vector b;         // p exact integrals, b = U^T W
  bool has_constant = false;
  bool augmented = false;  // constant column prepended by augment_constant
  double sum_weights = 0.0;
  double snapshot_norm_w = 0.0;  // |A|_W of the snapshots
  Vector weights;                // W_FE kept for checks and augmentation
  // Augmented column v = 1 - U c with c the pre-augmentation integrals and
  // |v|_W its normalization; reproduces the column exactly off-grid.
  Vector aug_coeffs;
  double aug_norm = 0.0;

  std::optional<AnalyticIntegrand> analytic;

  Index size() const { return u.cols(); }
  /// Columns of U that came from the SVD (excludes the augmented one).
  Index svd_size() const { return singular.size(); }
};

/// Basis through the weighted SVD at relative tolerance eps_svd. The basis
/// satisfies U^T diag(W) U = I and the truncated part obeys
/// |E|_W <= eps_svd * |A|_W.
BasisModel compute_basis(const SnapshotMatrix& a, double eps_svd,
                         SvdMethod method = SvdMethod::Auto,
                         std::uint64_t rng_seed = 0);

/// Ensures the all-ones vector lies in range(U): if the W-orthogonal
/// component of 1 is negligible the model is returned unchanged, otherwise
/// the normalized component is prepended as an extra column and b is
/// recomputed.
BasisModel augment_constant(BasisModel model);

/// Alternative augmentation route: appends the column c * 1 to the snapshot
/// matrix before the SVD so the constants enter the basis through the
/// factorization itself. c defaults to |A|_W / sqrt(sum W), large enough for
/// the SVD to regard the constant as representative.
SnapshotMatrix append_constant_column(const SnapshotMatrix& a,
                                      std::optional<double> c = std::nullopt);

/// The constant value used by append_constant_column (for wiring the extra
/// integrand component).
double default_constant_column_value(const SnapshotMatrix& a);

/// Basis values and gradients at one point.
struct BasisEval {
  RowVector u;    // 1 x p
  Matrix grad;    // d x p
  Index element;  // owner element (locate result)
};

/// Shared evaluation interface consumed by the sparsification driver.
/// Returns nullopt when x falls outside the domain.
class BasisEvaluator {
 public:
  virtual ~BasisEvaluator() = default;
  virtual std::optional<BasisEval> operator()(
      const Vector& x, std::optional<Index> hint = std::nullopt,
      double radius = 0.0) const = 0;
  virtual Index size() const = 0;
};

/// Evaluation through the integrand's analytic expression:
/// u(x) = A(x) V S^{-1}. The augmented column evaluates through its defining
/// combination (1 - u(x) c) / |v|_W, which degenerates to the constant
/// 1/sqrt(sum W) when the basis was orthogonal to the constants. Domain
/// membership is still checked against the mesh.
class AnalyticEvaluator final : public BasisEvaluator {
 public:
  AnalyticEvaluator(const BasisModel& model, const Mesh& mesh);

  std::optional<BasisEval> operator()(const Vector& x,
                                      std::optional<Index> hint,
                                      double radius) const override;
  Index size() const override { return p_; }

  /// Evaluation without the domain check (consistency diagnostics).
  BasisEval eval_unchecked(const Vector& x) const;

  /// Diagnostic for truncated bases: |A(x) - u(x) S V^T|, the part of the
  /// integrand at x that the retained right space cannot represent.
  double reconstruction_residual(const Vector& x) const;

  /// Enables the whole-mesh scan when the patch search fails (off by
  /// default; a relocation outside the patch then counts as out-of-domain).
  void set_global_fallback(bool enabled) { global_fallback_ = enabled; }

 private:
  const Mesh& mesh_;
  Matrix v_sinv_;  // V * S^{-1}
  Matrix v_s_;     // V * S, for the reconstruction diagnostic
  AnalyticIntegrand integrand_;
  bool augmented_;
  Vector aug_coeffs_;
  double aug_inv_norm_;
  bool global_fallback_ = false;
  Index p_;
};

/// Gauss-point interpolatory evaluation: u(x) = N(x) U^(e) over the owning
/// element's Gauss rows, with interpolants built on demand.
class InterpEvaluator final : public BasisEvaluator {
 public:
  InterpEvaluator(const BasisModel& model, const Mesh& mesh,
                  const GaussField& field,
                  std::shared_ptr<InterpolantCache> cache = nullptr);

  std::optional<BasisEval> operator()(const Vector& x,
                                      std::optional<Index> hint,
                                      double radius) const override;
  Index size() const override { return model_.u.cols(); }

  InterpolantCache& cache() { return *cache_; }
  void set_global_fallback(bool enabled) { global_fallback_ = enabled; }

 private:
  const BasisModel& model_;
  const Mesh& mesh_;
  const GaussField& field_;
  std::shared_ptr<InterpolantCache> cache_;
  bool global_fallback_ = false;
};

}  // namespace cecm

#endif
