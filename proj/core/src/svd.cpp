#include "cecm/svd.hpp"

#include <algorithm>
#include <cmath>

#include "cecm/random.hpp"

namespace cecm {

namespace {

// Flip each singular pair so the largest-magnitude entry of the left vector
// is positive. Keeps factorizations comparable across implementations.
void normalize_signs(Matrix& left, Matrix& right) {
  for (Index j = 0; j < left.cols(); ++j) {
    Index imax = 0;
    left.col(j).cwiseAbs().maxCoeff(&imax);
    if (left(imax, j) < 0.0) {
      left.col(j) = -left.col(j);
      right.col(j) = -right.col(j);
    }
  }
}

}  // namespace

SvdFactors svd_truncated(const Matrix& M, double eps_abs,
                         std::optional<double> mu_mach_opt) {
  if (eps_abs < 0.0) throw InputError("svd_truncated: eps_abs must be >= 0");
  SvdFactors out;
  if (M.rows() == 0 || M.cols() == 0) {
    out.left = Matrix(M.rows(), 0);
    out.right = Matrix(M.cols(), 0);
    out.singular = Vector(0);
    return out;
  }
  if (!M.allFinite())
    throw InputError("svd_truncated: matrix has non-finite entries");

  const double mu_mach = mu_mach_opt.value_or(
      static_cast<double>(std::max(M.rows(), M.cols())) * ulp(M.norm()));

  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Index q = s.size();

  Index k = 0;
  if (eps_abs <= mu_mach) {
    // Numerical rank: keep everything at or above the machine threshold.
    while (k < q && s(k) >= mu_mach) ++k;
  } else {
    // Smallest k whose discarded tail energy stays within eps_abs.
    k = q;
    double tail2 = 0.0;
    while (k > 0) {
      const double t2 = tail2 + s(k - 1) * s(k - 1);
      if (std::sqrt(t2) <= eps_abs) {
        tail2 = t2;
        --k;
      } else {
        break;
      }
    }
  }

  double disc2 = 0.0;
  for (Index i = k; i < q; ++i) disc2 += s(i) * s(i);

  out.left = svd.matrixU().leftCols(k);
  out.right = svd.matrixV().leftCols(k);
  out.singular = s.head(k);
  out.truncation_error = std::sqrt(disc2);
  out.rank = k;
  normalize_signs(out.left, out.right);
  return out;
}

RangeFactors rorth_inc(const Matrix& C_in, double mu, Index r_est,
                       std::uint64_t rng_seed, std::optional<Index> dr_min_opt,
                       std::optional<Index> dr_max_opt) {
  if (mu <= 0.0) throw InputError("rorth_inc: tolerance mu must be positive");
  const Index n = C_in.rows();
  const Index m = C_in.cols();
  const Index q = std::min(n, m);

  RangeFactors out;
  out.basis = Matrix(n, 0);
  out.coeffs = Matrix(0, m);
  if (q == 0) return out;

  const Index dr_min = std::max<Index>(
      1, dr_min_opt.value_or(
             static_cast<Index>(std::ceil(0.01 * static_cast<double>(q)))));
  const Index dr_max = std::max(
      dr_min, dr_max_opt.value_or(static_cast<Index>(
                  std::ceil(0.25 * static_cast<double>(q)))));

  Matrix C = C_in;  // residual, shrunk in place
  GaussianSampler rng(rng_seed);

  double c = C.norm();
  double c_prev = c;       // rank/residual pair of the previous pass,
  double rank_prev = 0.0;  // anchors the logarithmic extrapolation
  double rank_guess =
      static_cast<double>(std::min(std::max<Index>(r_est, 1), q));
  Index dR = static_cast<Index>(rank_guess);
  int i = 1;

  while (c >= mu) {
    Matrix omega(m, dR);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n) *
                                         static_cast<double>(dR));
    for (Index jc = 0; jc < dR; ++jc)
      for (Index jr = 0; jr < m; ++jr) omega(jr, jc) = rng() * scale;

    const Matrix sample = C * omega;
    SvdFactors sf = svd_truncated(sample, 0.0);
    if (sf.empty()) break;  // sample carries no new directions; caller decides

    Matrix dH = sf.left;
    if (i > 1) {
      // Re-orthogonalization against the accumulated basis.
      SvdFactors re = svd_truncated(
          dH - out.basis * (out.basis.transpose() * dH), 0.0);
      if (re.empty()) break;
      dH = std::move(re.left);
    }

    Matrix dB = dH.transpose() * C;
    C.noalias() -= dH * dB;
    const double c_new = C.norm();

    const Index k_old = out.basis.cols();
    out.basis.conservativeResize(Eigen::NoChange, k_old + dH.cols());
    out.basis.rightCols(dH.cols()) = dH;
    out.coeffs.conservativeResize(out.coeffs.rows() + dB.rows(),
                                  Eigen::NoChange);
    out.coeffs.bottomRows(dB.rows()) = dB;
    out.rank_steps.push_back(dR);
    out.residual_steps.push_back(c_new);
    c = c_new;

    // Logarithmic estimation of the rank needed to reach mu, assuming
    // exponential decay of the singular values.
    double rank_next =
        rank_prev + (rank_guess - rank_prev) /
                        (std::log(c) - std::log(c_prev)) *
                        (std::log(mu) - std::log(c_prev));
    if (!std::isfinite(rank_next)) rank_next = static_cast<double>(q);
    rank_next = std::min(rank_next, static_cast<double>(q));
    dR = static_cast<Index>(std::ceil(rank_next - rank_guess));
    dR = std::min<Index>(dr_max, dR);
    dR = std::max<Index>(dr_min, dR);

    ++i;
    c_prev = c;
    rank_prev = rank_guess;
    rank_guess += static_cast<double>(dR);
  }

  out.residual = c;
  out.iterations = static_cast<int>(out.rank_steps.size());
  return out;
}

SvdFactors rsvd_inc(const Matrix& dA, double eps, double mu, Index r_est,
                    std::uint64_t rng_seed, int& iterations) {
  if (eps < 0.0) throw InputError("rsvd_inc: eps must be >= 0");
  RangeFactors rf = rorth_inc(dA, mu, r_est, rng_seed);
  iterations = rf.iterations;

  if (rf.basis.cols() == 0) {
    SvdFactors out;
    out.left = Matrix(dA.rows(), 0);
    out.right = Matrix(dA.cols(), 0);
    out.singular = Vector(0);
    return out;
  }

  const double bnorm = rf.coeffs.norm();
  const double mu_mach =
      static_cast<double>(std::max(dA.rows(), dA.cols())) * ulp(bnorm);
  SvdFactors f = svd_truncated(rf.coeffs, eps * bnorm, mu_mach);
  f.left = rf.basis * f.left;
  // The lift can flip which entry dominates; re-apply the sign convention.
  for (Index j = 0; j < f.left.cols(); ++j) {
    Index imax = 0;
    f.left.col(j).cwiseAbs().maxCoeff(&imax);
    if (f.left(imax, j) < 0.0) {
      f.left.col(j) = -f.left.col(j);
      f.right.col(j) = -f.right.col(j);
    }
  }
  return f;
}

SvdFactors rsvd_inc(const Matrix& dA, double eps, double mu, Index r_est,
                    std::uint64_t rng_seed) {
  int unused = 0;
  return rsvd_inc(dA, eps, mu, r_est, rng_seed, unused);
}

}  // namespace cecm
