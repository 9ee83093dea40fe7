#include "cecm/interpolant.hpp"

#include <cmath>
#include <mutex>

namespace cecm {

namespace {

// Tensor monomial exponents up to degree q-1 per direction, first
// direction fastest; matches the Gauss tensor ordering.
Eigen::MatrixXi monomial_exponents(int d, int q) {
  Index r = 1;
  for (int i = 0; i < d; ++i) r *= q;
  Eigen::MatrixXi exp(r, d);
  for (Index g = 0; g < r; ++g) {
    Index rest = g;
    for (int i = 0; i < d; ++i) {
      exp(g, i) = static_cast<int>(rest % q);
      rest /= q;
    }
  }
  return exp;
}

RowVector monomials_at(const Eigen::MatrixXi& exp, const Vector& xp) {
  RowVector row(exp.rows());
  for (Index t = 0; t < exp.rows(); ++t) {
    double v = 1.0;
    for (Index i = 0; i < exp.cols(); ++i)
      for (int k = 0; k < exp(t, i); ++k) v *= xp(i);
    row(t) = v;
  }
  return row;
}

}  // namespace

ElementInterpolant build_interpolant(const Mesh& mesh, Index e,
                                     const GaussField& field) {
  const int d = mesh.dim;
  const int q = mesh.gauss_per_dir;
  const auto [begin, count] = field.per_element.at(static_cast<std::size_t>(e));

  ElementInterpolant itp;
  itp.element = e;
  itp.centroid = field.points.middleRows(begin, count).colwise().mean();
  itp.scale = Vector::Ones(d);
  for (int i = 0; i < d; ++i) {
    double li = 0.0;
    for (Index g = 0; g < count; ++g)
      li = std::max(li, std::abs(field.points(begin + g, i) - itp.centroid(i)));
    if (li > 0.0) itp.scale(i) = li;
  }
  itp.exponents = monomial_exponents(d, q);

  Matrix moment(count, count);
  for (Index g = 0; g < count; ++g) {
    const Vector xp = (field.points.row(begin + g).transpose() - itp.centroid)
                          .cwiseQuotient(itp.scale);
    moment.row(g) = monomials_at(itp.exponents, xp);
  }

  Eigen::JacobiSVD<Matrix> svd(moment);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  itp.condition = (smin > 0.0) ? smax / smin
                               : std::numeric_limits<double>::infinity();
  if (!(itp.condition <= 1e12))
    throw NumericalError("element " + std::to_string(e) +
                         ": moment matrix condition " +
                         std::to_string(itp.condition) +
                         " exceeds 1e12 (element too distorted)");
  itp.inv_moment = moment.partialPivLu().inverse();
  return itp;
}

RowVector shape_at(const ElementInterpolant& itp, const Vector& x) {
  const Vector xp = (x - itp.centroid).cwiseQuotient(itp.scale);
  return monomials_at(itp.exponents, xp) * itp.inv_moment;
}

Matrix shape_grad_at(const ElementInterpolant& itp, const Vector& x) {
  const Index d = itp.scale.size();
  const Index r = itp.exponents.rows();
  const Vector xp = (x - itp.centroid).cwiseQuotient(itp.scale);

  Matrix dp(d, r);
  for (Index i = 0; i < d; ++i) {
    for (Index t = 0; t < r; ++t) {
      const int ei = itp.exponents(t, i);
      if (ei == 0) {
        dp(i, t) = 0.0;
        continue;
      }
      double v = static_cast<double>(ei);
      for (Index j = 0; j < d; ++j) {
        const int ej = itp.exponents(t, j);
        const int pw = (j == i) ? ej - 1 : ej;
        for (int k = 0; k < pw; ++k) v *= xp(j);
      }
      dp(i, t) = v / itp.scale(i);  // chain rule through the scaling map
    }
  }
  return dp * itp.inv_moment;
}

const ElementInterpolant& InterpolantCache::get(Index e) const {
  {
    std::shared_lock lock(mutex_);
    auto it = map_.find(e);
    if (it != map_.end()) return *it->second;
  }
  auto built = std::make_unique<ElementInterpolant>(
      build_interpolant(mesh_, e, field_));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = map_.try_emplace(e, std::move(built));
  return *it->second;
}

std::size_t InterpolantCache::size() const {
  std::shared_lock lock(mutex_);
  return map_.size();
}

}  // namespace cecm
