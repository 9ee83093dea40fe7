#include "cecm/srsvd.hpp"

#include <algorithm>
#include <cmath>

namespace cecm {

namespace {

// Distinct per-block RNG streams from one user seed.
std::uint64_t block_seed(std::uint64_t seed, int block) {
  return seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(block + 1);
}

}  // namespace

QlFactors srorth(const BlockSource& blocks, std::uint64_t rng_seed) {
  const int p = blocks.block_count();
  if (p == 0) throw InputError("srorth: block source is empty");
  const Index n = blocks.rows();

  QlFactors out;
  out.q = Matrix(n, 0);
  out.stats.resize(static_cast<std::size_t>(p));

  // P_i = Q^T A_i recorded as blocks grow; zero-padded into L afterwards.
  std::vector<Matrix> projections(static_cast<std::size_t>(p));

  Index r_est = 0;  // previous block's contribution, rank guess for the next
  for (int i = 0; i < p; ++i) {
    const Matrix a = blocks.load(i);
    if (a.rows() != n)
      throw InputError("srorth: block " + std::to_string(i) +
                       " row count mismatch");
    const Index mi = a.cols();
    if (i == 0)
      r_est = static_cast<Index>(
          std::ceil(0.01 * static_cast<double>(std::min(n, mi))));

    Matrix delta = (i == 0) ? a : Matrix(a - out.q * (out.q.transpose() * a));
    const double mu_mach =
        static_cast<double>(std::max(n, mi)) * ulp(a.norm());

    Index added = 0;
    if (delta.norm() > mu_mach) {
      int iters = 0;
      SvdFactors sf = rsvd_inc(delta, 0.0, mu_mach, std::max<Index>(1, r_est),
                               block_seed(rng_seed, i), iters);
      out.stats[static_cast<std::size_t>(i)].rorth_iters = iters;
      Matrix dq = std::move(sf.left);
      if (i > 0 && dq.cols() > 0) {
        // Re-orthogonalization against the accumulated basis.
        SvdFactors re =
            svd_truncated(dq - out.q * (out.q.transpose() * dq), 0.0);
        dq = std::move(re.left);
      }
      if (dq.cols() > 0) {
        out.q.conservativeResize(Eigen::NoChange, out.q.cols() + dq.cols());
        out.q.rightCols(dq.cols()) = dq;
        added = dq.cols();
      }
    }
    out.stats[static_cast<std::size_t>(i)].added_cols = added;
    projections[static_cast<std::size_t>(i)] = out.q.transpose() * a;
    r_est = added;
  }

  // L is block upper-triangular: Delta Q_j^T A_i = 0 for j > i, so column
  // block i is P_i padded with zeros below.
  const Index r = out.q.cols();
  out.l = Matrix(r, blocks.total_cols());
  Index col = 0;
  for (int i = 0; i < p; ++i) {
    const Matrix& pi = projections[static_cast<std::size_t>(i)];
    out.l.block(0, col, pi.rows(), pi.cols()) = pi;
    if (pi.rows() < r)
      out.l.block(pi.rows(), col, r - pi.rows(), pi.cols()).setZero();
    col += pi.cols();
  }
  return out;
}

SrsvdResult srsvd(const BlockSource& blocks, double eps,
                  std::uint64_t rng_seed) {
  if (eps < 0.0 || eps > 1.0)
    throw InputError("srsvd: eps must lie in [0, 1]");
  QlFactors ql = srorth(blocks, rng_seed);

  SrsvdResult out;
  out.stats = std::move(ql.stats);
  if (ql.q.cols() == 0) {
    out.factors.left = Matrix(blocks.rows(), 0);
    out.factors.right = Matrix(blocks.total_cols(), 0);
    out.factors.singular = Vector(0);
    return out;
  }

  const double lnorm = ql.l.norm();
  const double mu_mach =
      static_cast<double>(std::max(blocks.rows(), blocks.total_cols())) *
      ulp(lnorm);
  out.factors = svd_truncated(ql.l, eps * lnorm, mu_mach);
  out.factors.left = ql.q * out.factors.left;
  for (Index j = 0; j < out.factors.left.cols(); ++j) {
    Index imax = 0;
    out.factors.left.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.factors.left(imax, j) < 0.0) {
      out.factors.left.col(j) = -out.factors.left.col(j);
      out.factors.right.col(j) = -out.factors.right.col(j);
    }
  }
  return out;
}

}  // namespace cecm
