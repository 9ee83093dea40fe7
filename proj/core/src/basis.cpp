#include "cecm/basis.hpp"

#include <cmath>

#include "cecm/svd.hpp"

namespace cecm {

Matrix weighted_snapshots(const Matrix& a, const Vector& weights) {
  if (a.rows() != weights.size())
    throw InputError("weighted_snapshots: row count != weight count");
  if ((weights.array() <= 0.0).any())
    throw InputError("weighted_snapshots: weights must be strictly positive");
  return weights.array().sqrt().matrix().asDiagonal() * a;
}

std::shared_ptr<const BlockSource> weighted_snapshots(
    std::shared_ptr<const BlockSource> a, const Vector& weights) {
  if ((weights.array() <= 0.0).any())
    throw InputError("weighted_snapshots: weights must be strictly positive");
  return std::make_shared<RowScaledBlockSource>(
      std::move(a), weights.array().sqrt().matrix());
}

BasisModel compute_basis(const SnapshotMatrix& a, double eps_svd,
                         SvdMethod method, std::uint64_t rng_seed) {
  if (eps_svd < 0.0 || eps_svd > 1.0)
    throw InputError("compute_basis: eps_svd must lie in [0, 1]");
  if (a.rows() != a.weights.size())
    throw InputError("compute_basis: snapshot rows != weight count");
  if ((a.weights.array() <= 0.0).any())
    throw InputError("compute_basis: weights must be strictly positive");

  if (method == SvdMethod::Auto)
    method = (a.data->block_count() == 1) ? SvdMethod::Dense
                                          : SvdMethod::Sequential;

  const Vector sqrt_w = a.weights.array().sqrt().matrix();
  SvdFactors f;
  double weighted_norm = 0.0;
  if (method == SvdMethod::Sequential) {
    auto weighted = weighted_snapshots(a.data, a.weights);
    for (int i = 0; i < weighted->block_count(); ++i) {
      const double bn = weighted->load(i).norm();
      weighted_norm = std::hypot(weighted_norm, bn);
    }
    f = srsvd(*weighted, eps_svd, rng_seed).factors;
  } else {
    Matrix dense(a.rows(), a.cols());
    Index col = 0;
    for (int i = 0; i < a.data->block_count(); ++i) {
      const Matrix block = a.data->load(i);
      dense.middleCols(col, block.cols()) = block;
      col += block.cols();
    }
    dense = sqrt_w.asDiagonal() * dense;
    weighted_norm = dense.norm();
    if (method == SvdMethod::Dense) {
      f = svd_truncated(dense, eps_svd * weighted_norm);
    } else {
      const double mu = std::max(
          eps_svd * weighted_norm,
          static_cast<double>(std::max(dense.rows(), dense.cols())) *
              ulp(weighted_norm));
      const Index r0 = std::max<Index>(
          1, static_cast<Index>(
                 std::ceil(0.05 * static_cast<double>(
                                      std::max(dense.rows(), dense.cols())))));
      f = rsvd_inc(dense, eps_svd, mu, r0, rng_seed);
    }
  }

  BasisModel model;
  model.u = sqrt_w.cwiseInverse().asDiagonal() * f.left;
  model.singular = f.singular;
  model.v = f.right;
  model.b = model.u.transpose() * a.weights;
  model.sum_weights = a.weights.sum();
  model.snapshot_norm_w = weighted_norm;
  model.weights = a.weights;
  return model;
}

BasisModel augment_constant(BasisModel model) {
  const Index m = model.u.rows();
  const Vector ones = Vector::Ones(m);
  Vector coeffs = model.u.transpose() * model.weights;
  // A basis orthogonal to the constants leaves only roundoff in the
  // projection; snap it away so the added column is exactly constant.
  if (coeffs.norm() <= 1e-14 * std::sqrt(model.sum_weights)) coeffs.setZero();
  const Vector v = ones - model.u * coeffs;
  const double vnorm_w =
      std::sqrt(v.dot(model.weights.cwiseProduct(v)));

  if (vnorm_w <= 1e-8 * std::sqrt(model.sum_weights)) {
    model.has_constant = true;
    return model;
  }

  Matrix u_aug(m, model.u.cols() + 1);
  u_aug.col(0) = v / vnorm_w;
  u_aug.rightCols(model.u.cols()) = model.u;
  model.u = std::move(u_aug);
  model.b = model.u.transpose() * model.weights;
  model.has_constant = true;
  model.augmented = true;
  model.aug_coeffs = coeffs;
  model.aug_norm = vnorm_w;
  return model;
}

double default_constant_column_value(const SnapshotMatrix& a) {
  double norm_w = 0.0;
  const Vector sqrt_w = a.weights.array().sqrt().matrix();
  for (int i = 0; i < a.data->block_count(); ++i)
    norm_w = std::hypot(norm_w, (sqrt_w.asDiagonal() * a.data->load(i)).norm());
  return norm_w / std::sqrt(a.weights.sum());
}

SnapshotMatrix append_constant_column(const SnapshotMatrix& a,
                                      std::optional<double> c) {
  const double value = c.value_or(default_constant_column_value(a));
  SnapshotMatrix out;
  out.data = std::make_shared<AppendColumnBlockSource>(
      a.data, Vector::Constant(a.rows(), value));
  out.weights = a.weights;
  return out;
}

AnalyticEvaluator::AnalyticEvaluator(const BasisModel& model, const Mesh& mesh)
    : mesh_(mesh) {
  if (!model.analytic)
    throw InputError("AnalyticEvaluator: model has no analytic backend");
  integrand_ = *model.analytic;
  if (integrand_.components != model.v.rows())
    throw InputError(
        "AnalyticEvaluator: integrand component count does not match V");
  const Index k = model.singular.size();
  if (k > 0) {
    const double smax = model.singular(0);
    if (model.singular(k - 1) < 1e-14 * smax)
      throw NumericalError(
          "AnalyticEvaluator: near-zero singular values make analytic "
          "gradients blow up; rebuild the basis with a larger eps_svd");
  }
  v_sinv_ = model.v * model.singular.cwiseInverse().asDiagonal();
  v_s_ = model.v * model.singular.asDiagonal();
  augmented_ = model.augmented;
  if (augmented_) {
    aug_coeffs_ = model.aug_coeffs;
    aug_inv_norm_ = 1.0 / model.aug_norm;
  }
  p_ = model.u.cols();
}

BasisEval AnalyticEvaluator::eval_unchecked(const Vector& x) const {
  BasisEval out;
  out.element = -1;
  const RowVector ax = integrand_.value(x);
  const Matrix dax = integrand_.gradient(x);
  const int d = integrand_.dim;
  out.u = RowVector(p_);
  out.grad = Matrix(d, p_);
  const Index off = augmented_ ? 1 : 0;
  out.u.tail(p_ - off) = ax * v_sinv_;
  out.grad.rightCols(p_ - off) = dax * v_sinv_;
  if (augmented_) {
    // Defining combination of the augmented column: (1 - u(x) c) / |v|_W.
    out.u(0) = (1.0 - out.u.tail(p_ - 1).dot(aug_coeffs_)) * aug_inv_norm_;
    out.grad.col(0) =
        -(out.grad.rightCols(p_ - 1) * aug_coeffs_) * aug_inv_norm_;
  }
  return out;
}

double AnalyticEvaluator::reconstruction_residual(const Vector& x) const {
  const RowVector ax = integrand_.value(x);
  const RowVector u_svd = ax * v_sinv_;
  return (ax - u_svd * v_s_.transpose()).norm();
}

std::optional<BasisEval> AnalyticEvaluator::operator()(
    const Vector& x, std::optional<Index> hint, double radius) const {
  LocateOptions opts;
  opts.hint = hint;
  opts.radius = radius;
  opts.global_fallback = global_fallback_;
  const auto e = locate(mesh_, x, opts);
  if (!e) return std::nullopt;
  BasisEval out = eval_unchecked(x);
  out.element = *e;
  return out;
}

InterpEvaluator::InterpEvaluator(const BasisModel& model, const Mesh& mesh,
                                 const GaussField& field,
                                 std::shared_ptr<InterpolantCache> cache)
    : model_(model), mesh_(mesh), field_(field), cache_(std::move(cache)) {
  if (!cache_) cache_ = std::make_shared<InterpolantCache>(mesh_, field_);
  if (model_.u.rows() != field_.size())
    throw InputError("InterpEvaluator: basis rows != Gauss point count");
}

std::optional<BasisEval> InterpEvaluator::operator()(
    const Vector& x, std::optional<Index> hint, double radius) const {
  LocateOptions opts;
  opts.hint = hint;
  opts.radius = radius;
  opts.global_fallback = global_fallback_;
  const auto e = locate(mesh_, x, opts);
  if (!e) return std::nullopt;

  const ElementInterpolant& itp = cache_->get(*e);
  const auto [begin, count] = field_.per_element[static_cast<std::size_t>(*e)];
  const auto u_block = model_.u.middleRows(begin, count);

  BasisEval out;
  out.element = *e;
  out.u = shape_at(itp, x) * u_block;
  out.grad = shape_grad_at(itp, x) * u_block;
  return out;
}

}  // namespace cecm
