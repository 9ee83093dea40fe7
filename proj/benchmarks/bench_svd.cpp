#include <benchmark/benchmark.h>

#include <cecm/block_source.hpp>
#include <cecm/random.hpp>
#include <cecm/srsvd.hpp>
#include <cecm/svd.hpp>

using namespace cecm;

namespace {

Matrix low_rank(Index n, Index m, Index rank, std::uint64_t seed) {
  GaussianSampler rng(seed);
  Matrix u(n, rank), v(m, rank);
  for (Index j = 0; j < rank; ++j) {
    for (Index i = 0; i < n; ++i) u(i, j) = rng();
    for (Index i = 0; i < m; ++i) v(i, j) = rng();
  }
  Vector s(rank);
  for (Index i = 0; i < rank; ++i)
    s(i) = std::pow(10.0, -3.0 * static_cast<double>(i) /
                              static_cast<double>(rank));
  return u * s.asDiagonal() * v.transpose();
}

void BM_SvdTruncated(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix m = low_rank(n, n / 4, n / 16, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(svd_truncated(m, 1e-8 * m.norm()));
  }
}
BENCHMARK(BM_SvdTruncated)->Arg(256)->Arg(1024)->Arg(4096);

void BM_RsvdInc(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix m = low_rank(n, n / 4, n / 16, 13);
  const double mu = 1e-8 * m.norm();
  for (auto _ : state) {
    benchmark::DoNotOptimize(rsvd_inc(m, 1e-8, mu, n / 32, 5));
  }
}
BENCHMARK(BM_RsvdInc)->Arg(256)->Arg(1024)->Arg(4096);

void BM_Srsvd(benchmark::State& state) {
  const int blocks = static_cast<int>(state.range(0));
  const Matrix m = low_rank(2000, 240, 30, 17);
  std::vector<Matrix> parts;
  const Index width = m.cols() / blocks;
  for (int i = 0; i < blocks; ++i)
    parts.push_back(m.middleCols(i * width, (i == blocks - 1)
                                                ? m.cols() - i * width
                                                : width));
  const DenseBlockSource source(parts);
  for (auto _ : state) {
    benchmark::DoNotOptimize(srsvd(source, 1e-8, 3));
  }
}
BENCHMARK(BM_Srsvd)->Arg(1)->Arg(4)->Arg(12);

}  // namespace
