#ifndef CECM_TEST_HELPERS_HPP
#define CECM_TEST_HELPERS_HPP

#include <cecm/random.hpp>
#include <cecm/types.hpp>

#include <cmath>
#include <vector>

namespace cecm::testing {

inline Matrix random_matrix(Index n, Index m, std::uint64_t seed) {
  GaussianSampler rng(seed);
  Matrix a(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) a(i, j) = rng();
  return a;
}

inline Matrix random_orthonormal(Index n, Index k, std::uint64_t seed) {
  const Matrix a = random_matrix(n, k, seed);
  Eigen::HouseholderQR<Matrix> qr(a);
  return Matrix(qr.householderQ() * Matrix::Identity(n, k));
}

/// n x m matrix of the given rank with log-spaced singular values between
/// 1 and 1/condition.
inline Matrix random_low_rank(Index n, Index m, Index rank, double condition,
                              std::uint64_t seed) {
  const Matrix u = random_orthonormal(n, rank, seed);
  const Matrix v = random_orthonormal(m, rank, seed + 101);
  Vector s(rank);
  for (Index i = 0; i < rank; ++i)
    s(i) = (rank == 1)
               ? 1.0
               : std::pow(condition, -static_cast<double>(i) /
                                         static_cast<double>(rank - 1));
  return u * s.asDiagonal() * v.transpose();
}

/// Singular values by an independent route: eigenvalues of M^T M (or M M^T,
/// whichever is smaller) through the self-adjoint eigensolver.
inline Vector oracle_singular_values(const Matrix& m) {
  const Matrix gram = (m.rows() >= m.cols())
                          ? Matrix(m.transpose() * m)
                          : Matrix(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  Vector ev = eig.eigenvalues();
  Vector s(ev.size());
  for (Index i = 0; i < ev.size(); ++i)
    s(i) = std::sqrt(std::max(0.0, ev(ev.size() - 1 - i)));
  return s;  // descending
}

/// Random column partition of m columns into up to max_blocks pieces.
inline std::vector<Index> random_partition(Index m, int max_blocks,
                                           std::uint64_t seed) {
  GaussianSampler rng(seed);
  const int blocks =
      1 + static_cast<int>(rng.raw() % static_cast<std::uint64_t>(max_blocks));
  std::vector<Index> cuts;
  cuts.push_back(0);
  for (int i = 1; i < blocks; ++i)
    cuts.push_back(static_cast<Index>(rng.raw() % static_cast<std::uint64_t>(m)));
  cuts.push_back(m);
  std::sort(cuts.begin(), cuts.end());
  std::vector<Index> sizes;
  for (std::size_t i = 1; i < cuts.size(); ++i)
    if (cuts[i] > cuts[i - 1]) sizes.push_back(cuts[i] - cuts[i - 1]);
  if (sizes.empty()) sizes.push_back(m);
  return sizes;
}

}  // namespace cecm::testing

#endif
