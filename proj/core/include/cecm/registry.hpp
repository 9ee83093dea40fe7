#ifndef CECM_REGISTRY_HPP
#define CECM_REGISTRY_HPP

#include <string>
#include <vector>

#include "cecm/basis.hpp"
#include "cecm/types.hpp"

namespace cecm {

/// Lagrange polynomial family on [-1,1]^dim with equally spaced nodes:
/// (degree+1)^dim tensor products, first index fastest.
AnalyticIntegrand lagrange_family(int dim, int degree);

/// Six-component exponential-sinusoidal family on [-1,1]^3, sampled over a
/// uniform grid x grid lattice of the parameter box [1,pi]^2. Components per
/// parameter sample are ordered sample-major.
AnalyticIntegrand expsin3d_family(int grid);

/// Named lookup used by the CLI: "lagrange1d", "lagrange2d", "lagrange3d"
/// (option: degree), "expsin3d" (option: grid).
AnalyticIntegrand make_registry_function(const std::string& name, int degree,
                                         int grid);

/// Dense snapshot matrix of an analytic integrand at the Gauss points.
Matrix sample_integrand(const AnalyticIntegrand& f, const Matrix& points);

/// Column-partitioned view of an analytic integrand, sampled block by block
/// on demand so the full snapshot matrix never has to fit in memory. Loads
/// re-evaluate the integrand, trading compute for footprint.
class SampledBlockSource final : public BlockSource {
 public:
  SampledBlockSource(AnalyticIntegrand f, Matrix points, Index cols_per_block);

  int block_count() const override;
  Index rows() const override { return points_.rows(); }
  Index block_cols(int i) const override;
  Matrix load(int i) const override;

 private:
  AnalyticIntegrand f_;
  Matrix points_;
  Index cols_per_block_;
};

}  // namespace cecm

#endif
