#ifndef CECM_SVD_HPP
#define CECM_SVD_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "cecm/types.hpp"

namespace cecm {

/// Truncated singular value decomposition M ~= left * diag(singular) * right^T.
struct SvdFactors {
  Matrix left;              // n x k, orthonormal columns
  Vector singular;          // k, strictly positive, non-increasing
  Matrix right;             // m x k, orthonormal columns
  double truncation_error = 0.0;  // Frobenius norm of the discarded part
  Index rank = 0;

  bool empty() const { return rank == 0; }
};

/// Truncated SVD of a dense matrix.
///
/// If eps_abs is at or below the machine threshold mu_mach (default
/// max(n,m)*ulp(|M|_F)), every singular value >= mu_mach is retained
/// (numerical rank). Otherwise the smallest k with
/// sqrt(sum_{i>k} s_i^2) <= eps_abs is kept.
/// Singular vector pairs are sign-normalized so that the largest-magnitude
/// entry of each left vector is positive.
SvdFactors svd_truncated(const Matrix& M, double eps_abs,
                         std::optional<double> mu_mach = std::nullopt);

/// Result of the incremental randomized orthogonalization.
struct RangeFactors {
  Matrix basis;        // H: n x k, orthonormal
  Matrix coeffs;       // B = H^T * C: k x m
  double residual = 0.0;          // |C - H*B|_F on exit
  int iterations = 0;             // outer iterations taken
  std::vector<Index> rank_steps;  // ΔR drawn at each iteration
  std::vector<double> residual_steps;  // |C|_F after each iteration
};

/// Incremental randomized orthogonalization with rank steps of varying size.
///
/// Builds an orthonormal H with |C - H*B|_F <= mu, B = H^T*C. Each pass draws
/// an m x ΔR Gaussian test matrix scaled by 1/sqrt(n*ΔR), orthonormalizes the
/// sample C*Omega through svd_truncated at tolerance 0, re-orthogonalizes
/// against the accumulated basis, and grows the rank guess by logarithmic
/// extrapolation of the residual decay, clamped to [dr_min, dr_max].
/// If the sample SVD comes back empty the loop exits and the caller decides
/// what to do with the returned residual.
RangeFactors rorth_inc(const Matrix& C, double mu, Index r_est,
                       std::uint64_t rng_seed,
                       std::optional<Index> dr_min = std::nullopt,
                       std::optional<Index> dr_max = std::nullopt);

/// Randomized truncated SVD: rorth_inc followed by svd_truncated of B and the
/// left-factor lift U <- H*U~. Factors satisfy
/// |dA - U*S*V^T|_F <= max(eps*|B|_F, machine threshold).
SvdFactors rsvd_inc(const Matrix& dA, double eps, double mu, Index r_est,
                    std::uint64_t rng_seed);

/// rsvd_inc variant that also reports the range-finder iteration count.
SvdFactors rsvd_inc(const Matrix& dA, double eps, double mu, Index r_est,
                    std::uint64_t rng_seed, int& iterations);

}  // namespace cecm

#endif
